#pragma once

#include <cstdint>
#include <vector>

#include "blochdos/lattice.hpp"

namespace blochdos {

struct StructuralConstants {
  double R = 0.0;  // rho^{1/(36 d^2 (d+2))}
  int M = 0;       // 5 d^2 + 7 d
};

/// Requires rho > 1 and d >= 2.
StructuralConstants structural_constants(double rho, int d);

/// Energy lambda = rho^2, potential size v and the radius defining the resonance
/// directions Theta' = dual lattice points in B(theta_radius) minus the origin.
struct GeometryParams {
  double rho = 0.0;
  double v = 0.0;
  int d = 2;
  double theta_radius = 1.0;
  double j_lower = 0.0;  // J = [lambda - 20 v, lambda + 20 v]
  double j_upper = 0.0;

  /// Validates rho > 0, v >= 0, d >= 2, theta_radius > 0.
  static GeometryParams make(double rho, double v, int d, double theta_radius);
  /// theta_radius = 6 M R, the asymptotic-regime value.
  static GeometryParams with_structural_theta(double rho, double v, int d);

  double lambda() const { return rho * rho; }
};

/// | |xi|^2 - rho^2 | <= 40 v
bool in_A(const Vector& xi, const GeometryParams& params);

/// xi in A and |<xi, eta/|eta|>| > rho^{1/2} for every eta in Theta'.
bool in_B(const Vector& xi, const GeometryParams& params, const DualLattice& dual);

struct FractionReport {
  double fraction = 0.0;
  double ci_halfwidth = 0.0;  // binomial 95%
  std::int64_t samples = 0;
  std::int64_t regular = 0;
};

/// Monte-Carlo share of unit directions whose ray stays in B across the A-shell,
/// probed at 16 evenly spaced radii. Samples are drawn in fixed chunks with their own
/// seeds, so the result depends only on (params, samples, seed), not on `workers`.
FractionReport regular_direction_fraction(const GeometryParams& params, const DualLattice& dual,
                                          std::int64_t samples, std::uint64_t seed,
                                          int workers = 1);

}  // namespace blochdos
