#pragma once

#include <vector>

#include "blochdos/types.hpp"

namespace blochdos {

/// A full-rank lattice in R^d, d >= 2. Rows of the basis matrix are the generators,
/// so the point with integer coordinates c is c^T * basis.
class Lattice {
 public:
  /// Throws ValidationError for non-square, singular or one-dimensional bases.
  explicit Lattice(Matrix basis);

  int dim() const { return static_cast<int>(basis_.rows()); }
  const Matrix& basis() const { return basis_; }
  double cell_volume() const { return volume_; }

  Vector to_cartesian(const IntVector& coords) const;
  /// Real coordinates of x in the lattice basis.
  Vector to_coordinates(const Vector& x) const;

  /// Upper bound on the covering radius: half the length of the sum of squared
  /// generator lengths. Every point of R^d is within this distance of the lattice.
  double covering_radius_bound() const;

  /// Integer coordinates of every lattice point n with |n - center| <= radius.
  /// Unordered; callers sort as needed.
  std::vector<IntVector> coordinates_in_ball(const Vector& center, double radius) const;

 private:
  Matrix basis_;
  Matrix inverse_;
  double volume_ = 0.0;
};

/// The lattice dual to a period lattice: <m, a> in 2*pi*Z for all m, a.
class DualLattice {
 public:
  const Lattice& geometry() const { return geometry_; }
  /// The period lattice this dual was built from.
  const Lattice& primal() const { return primal_; }

  int dim() const { return geometry_.dim(); }
  const Matrix& basis() const { return geometry_.basis(); }
  double cell_volume() const { return geometry_.cell_volume(); }
  Vector to_cartesian(const IntVector& coords) const { return geometry_.to_cartesian(coords); }

 private:
  friend DualLattice dual_lattice(const Lattice& lattice);
  DualLattice(Lattice geometry, Lattice primal)
      : geometry_(std::move(geometry)), primal_(std::move(primal)) {}

  Lattice geometry_;
  Lattice primal_;
};

/// Dual basis 2*pi*(B^{-1})^T, so that <m_i, a_j> = 2*pi*delta_ij.
DualLattice dual_lattice(const Lattice& lattice);

/// xi = n + k with n a nearest dual-lattice point and k in the first Brillouin zone.
struct Decomposition {
  IntVector integer_part;  // coordinates of n in the dual basis
  Vector lattice_point;    // n in Cartesian form
  Vector fractional_part;  // k = xi - n
};

/// Nearest dual point to xi; equidistant candidates resolve to the lexicographically
/// smallest integer coordinates.
Decomposition decompose(const Vector& xi, const DualLattice& dual);

struct BrillouinRadius {
  double value = 0.0;
  bool exact = false;  // false: covering-radius upper bound (dimensions above 3)
};

/// Q = max |k| over the Voronoi cell of the dual lattice about the origin.
/// Exact via Voronoi vertex enumeration for d in {2, 3}; an upper bound otherwise.
BrillouinRadius brillouin_radius(const DualLattice& dual);

struct LatticePoint {
  IntVector coords;
  Vector cartesian;
  double norm = 0.0;
};

/// Dual points with |n| <= radius, ordered by |n| then lexicographically.
std::vector<LatticePoint> points_in_ball(const DualLattice& dual, double radius,
                                         bool exclude_origin);

/// W = sup_{r>1} r^{-d} #{l : |l| <= r}.
///
/// The counting function is a right-continuous step function, so the supremum is
/// the larger of the r -> 1+ limit and the values at jump radii |l| > 1. Jumps are
/// scanned exactly up to a radius beyond which the volume tail bound
/// #{|l| <= r} <= vol B(r + c) / vol(cell), c the covering radius, cannot exceed
/// the scanned maximum.
double packing_constant_W(const DualLattice& dual);

/// Volume of the unit ball in R^d, omega_d / d.
double unit_ball_volume(int d);

}  // namespace blochdos
