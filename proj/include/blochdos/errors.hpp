#pragma once

#include <stdexcept>
#include <string>

namespace blochdos {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: bad parameters, singular lattices, malformed configs.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Fourier coefficients that do not describe a real-valued potential.
class SymmetryError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A numerical routine failed to factorize or converge.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A band could not be followed across a finite-difference step.
class TrackingError : public SolverError {
 public:
  using SolverError::SolverError;
};

/// A mathematical hypothesis of the requested computation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The eigenvalue is not simple, so band derivatives are ill-defined.
class DegeneracyError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

}  // namespace blochdos
