#pragma once

#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "blochdos/lattice.hpp"
#include "blochdos/types.hpp"

namespace blochdos {

/// One Fourier coefficient V_n, n given by integer coordinates in the dual basis.
struct FourierCoefficient {
  IntVector n;
  Complex value;
};

/// A real periodic potential given by finitely many Fourier coefficients
///
///   V_n = (vol Omega)^{-1/2} * integral over Omega of V(x) exp(-i<n, x>) dx,
///
/// so that V(x) = (vol Omega)^{-1/2} * sum_n V_n exp(i<n, x>).
/// Coefficients must satisfy V_{-n} = conj(V_n); the n = 0 entry is always stored.
class PotentialSpec {
 public:
  /// Duplicate indices are summed. Throws SymmetryError if the coefficients are not
  /// Hermitian-symmetric to relative tolerance `hermitian_tol`.
  PotentialSpec(DualLattice dual, std::vector<FourierCoefficient> coeffs,
                double hermitian_tol = 1e-12);

  static PotentialSpec zero(DualLattice dual);

  /// V(x) = sum_j a_j cos<n_j, x>, i.e. V_{+-n_j} = a_j/2 * sqrt(vol Omega).
  static PotentialSpec cosine_sum(DualLattice dual,
                                  const std::vector<std::pair<IntVector, double>>& terms);

  const DualLattice& dual() const { return dual_; }
  int dim() const { return dual_.dim(); }
  /// vol Omega of the period lattice.
  double cell_volume() const { return dual_.primal().cell_volume(); }

  /// Sorted by |n| then lexicographically; includes n = 0.
  std::span<const FourierCoefficient> coefficients() const { return coeffs_; }
  /// V_n, zero outside the support.
  Complex coefficient(const IntVector& n) const;

  /// Value of the constant mode, (vol Omega)^{-1/2} Re V_0.
  double constant_mode() const;

  /// The potential V + c.
  PotentialSpec shifted(double c) const;

  bool is_zero() const;

 private:
  DualLattice dual_;
  std::vector<FourierCoefficient> coeffs_;
  std::unordered_map<IntVector, std::size_t, IntVectorHash, IntVectorEqual> index_;
};

/// V(x). Throws SymmetryError if the imaginary residue exceeds 1e-10 * (1 + sum |V_n|).
double evaluate(const PotentialSpec& potential, const Vector& x);

/// Two-sided estimate of v = ||V||_inf.
struct SupNormBracket {
  double lower = 0.0;  // max |V| over a uniform grid on the period cell
  double upper = 0.0;  // (vol Omega)^{-1/2} sum |V_n|
};

/// Requires grid_per_dim >= 8.
SupNormBracket sup_norm(const PotentialSpec& potential, int grid_per_dim);

/// Only the upper end of the bracket (no grid evaluation).
double sup_norm_upper(const PotentialSpec& potential);

/// V^{(m)} = (sum_n |n|^{2m} |V_n|^2)^{1/2}, with |0|^0 = 1.
double sobolev_seminorm(const PotentialSpec& potential, double m);

}  // namespace blochdos
