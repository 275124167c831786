#pragma once

#include <cstddef>
#include <vector>

#include "blochdos/fibre.hpp"
#include "blochdos/potential.hpp"

namespace blochdos {

/// Constants for the high-energy eigenfunction estimates at accuracy eta in (0, 1):
///   m = floor((d + 1) / 3) + 1,  kappa = eta / (2m + 1),
///   zeta0 = max{36 Q^2 kappa^-2, (1 + m kappa)^{2/(d-1)} kappa^{-2d/(d-1)}},
///   M_1 = 6 V^(0),  M_j = 6 (2^{3j/2 - 1} W^{1/2} V^(0) M_{j-1} + V^(3(j-1)d/2)).
struct DecayConstants {
  int d = 2;
  double eta = 0.0;
  int m = 0;
  double kappa = 0.0;
  double zeta0 = 0.0;
  std::vector<double> chain;  // M_1, ..., M_m
  double W = 0.0;
  double Q = 0.0;

  double M() const { return chain.back(); }
  /// Coefficients with |n| >= (1 + m kappa) sqrt(zeta) obey the decay bound.
  double threshold_factor() const { return 1.0 + m * kappa; }
  /// M_m kappa^{-m} |n|^{-(3m+1)/2}
  double bound(double n_norm) const;
};

/// Throws ValidationError unless eta is in (0, 1).
DecayConstants decay_constants(const PotentialSpec& potential, int d, double eta, double Q, double W);
/// Q and W taken from the potential's dual lattice.
DecayConstants decay_constants(const PotentialSpec& potential, double eta);

/// M_1, ..., M_m for an explicit m >= 1.
std::vector<double> decay_chain(const PotentialSpec& potential, int d, double W, int m);

struct DecayViolation {
  IntVector n;
  double magnitude = 0.0;  // |psi_n|
  double bound = 0.0;
};

struct DecayReport {
  DecayConstants constants;
  Vector k;
  double cutoff = 0.0;
  double zeta = 0.0;
  double gap = 0.0;
  double residual = 0.0;
  bool degenerate = false;
  double threshold_radius = 0.0;  // (1 + m kappa) sqrt(zeta)
  double shell_outer = 0.0;       // 0.9 * cutoff; the outer tenth is truncation-contaminated
  std::size_t checked = 0;
  std::vector<DecayViolation> violations;
  double margin_min = 0.0;  // min bound / |psi_n| over tested n; +inf if all vanish
};

/// |psi_n| at or below this is numerically zero for a unit eigenvector and cannot
/// violate a bound.
inline constexpr double kCoefficientNoiseFloor = 1e-14;

struct VerifyOptions {
  FibreOptions fibre;
  IterationOptions iteration;
  double fd_step = 1e-4;
};

/// Solves for the eigenpair nearest band_target and checks the coefficient decay bound
/// on every basis index with (1 + m kappa) sqrt(zeta) <= |n| <= 0.9 cutoff.
/// Throws PreconditionError when zeta < zeta0 or cutoff < 1.15 (1 + m kappa) sqrt(zeta).
DecayReport verify_decay(const PotentialSpec& potential, const Vector& k, double band_target,
                         double eta, double cutoff, const VerifyOptions& options = {});

struct GradientReport {
  DecayConstants constants;
  Vector k;
  double cutoff = 0.0;
  double zeta = 0.0;
  double gap = 0.0;
  Vector hf_velocity;  // Hellmann-Feynman
  Vector fd_velocity;  // central differences of the tracked band
  double bound = 0.0;  // 2 (1 + eta) sqrt(zeta)
  bool bound_ok = false;
  double relative_difference = 0.0;  // |hf - fd| / (1 + |hf|)
  double step = 0.0;
};

/// Compares the Hellmann-Feynman velocity with central finite differences (same plane-wave
/// index set at k +- h e_i) and checks |grad zeta| <= 2 (1 + eta) sqrt(zeta).
/// Throws PreconditionError for zeta < zeta0, DegeneracyError for a non-simple band and
/// TrackingError when the band cannot be followed across the step.
GradientReport verify_gradient(const PotentialSpec& potential, const Vector& k, double band_target,
                               double eta, double cutoff, const VerifyOptions& options = {});

}  // namespace blochdos
