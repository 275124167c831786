#pragma once

#include <cstdint>

#include <Eigen/SparseCholesky>

#include "blochdos/fibre.hpp"

namespace blochdos::detail {

/// LDL^H factorization of A - shift*I for a Hermitian matrix stored as its upper triangle.
/// The symbolic analysis is done once; factorize() may be called for several shifts.
class ShiftedLdlt {
 public:
  explicit ShiftedLdlt(const SparseMatrix& upper) : upper_(upper) {
    solver_.analyzePattern(upper_);
  }

  /// Returns false if a pivot is exactly zero or below `pivot_floor` in magnitude.
  bool factorize(double shift, double pivot_floor) {
    SparseMatrix shifted = upper_;
    for (Eigen::Index j = 0; j < shifted.outerSize(); ++j) shifted.coeffRef(j, j) -= shift;
    solver_.factorize(shifted);
    if (solver_.info() != Eigen::Success) return false;
    const auto& d = solver_.vectorD();
    negatives_ = 0;
    min_pivot_ = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const double p = d[i].real();
      if (p < 0.0) ++negatives_;
      min_pivot_ = std::min(min_pivot_, std::abs(p));
    }
    return min_pivot_ > pivot_floor;
  }

  /// Number of negative pivots = number of eigenvalues below the shift.
  std::int64_t negatives() const { return negatives_; }
  double min_pivot() const { return min_pivot_; }

  Eigen::MatrixXcd solve(const Eigen::MatrixXcd& rhs) const { return solver_.solve(rhs); }

 private:
  SparseMatrix upper_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Upper, Eigen::AMDOrdering<int>> solver_;
  std::int64_t negatives_ = 0;
  double min_pivot_ = 0.0;
};

}  // namespace blochdos::detail
