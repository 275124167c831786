#pragma once

#include <cstdint>
#include <vector>

#include "blochdos/fibre.hpp"
#include "blochdos/potential.hpp"

namespace blochdos {

/// Free-Laplacian reference curves.
struct FreeReference {
  double omega_d = 0.0;  // surface area of S^{d-1}
  double n0 = 0.0;       // N_0(lambda) = (2 pi)^{-d} d^{-1} omega_d lambda^{d/2}
  double g0 = 0.0;       // g_0(lambda) = (2 pi)^{-d} omega_d lambda^{(d-2)/2} / 2
};

FreeReference free_reference(double lambda, int d);

/// Uniform G^d grid over the fundamental parallelepiped of the dual lattice, each point
/// reduced to the first Brillouin zone. Fibre spectra are periodic in k modulo the
/// dual lattice, so this integrates exactly like a grid over the Voronoi cell.
class QuadratureGrid {
 public:
  static QuadratureGrid uniform(const DualLattice& dual, int per_dim);

  int per_dim() const { return per_dim_; }
  const std::vector<Vector>& points() const { return points_; }
  /// (vol Omega)^{-1} G^{-d}: includes the (2 pi)^{-d} and vol(Omega^dagger) factors.
  double weight() const { return weight_; }
  double total_weight() const { return weight_ * static_cast<double>(points_.size()); }

 private:
  int per_dim_ = 0;
  double weight_ = 0.0;
  std::vector<Vector> points_;
};

struct IdsOptions {
  int workers = 1;
  FibreOptions fibre;
  /// Margin used when suggesting a cutoff in refusals and for the stabilization probe.
  double buffer = 2.0;
  /// Compare counts at cutoff and cutoff + buffer on a few k-points before the run.
  bool check_stability = true;
};

struct IdsReport {
  double lambda = 0.0;
  double value = 0.0;  // quadrature estimate of N(lambda)
  int grid = 0;
  double cutoff = 0.0;
  double free_reference = 0.0;  // N_0(lambda)
  std::int64_t counts_min = 0;
  std::int64_t counts_max = 0;
  std::int64_t count_total = 0;  // value = weight * count_total
  std::int64_t tie_perturbations = 0;
};

struct WindowReport {
  double lambda = 0.0;
  double epsilon = 0.0;
  double window = 0.0;  // N(lambda + eps) - N(lambda) on one grid
  double floor = 0.0;   // omega_d / (2 (2 pi)^d) * eps * lambda^{(d-2)/2}
  double ratio = 0.0;   // window / floor
  int grid = 0;
  double cutoff = 0.0;
  std::int64_t count_difference = 0;  // window = weight * count_difference
  std::int64_t tie_perturbations = 0;
};

/// Quadrature IDS: sum over grid points of weight * #{j : lambda_j(k) < lambda}.
/// Throws PreconditionError when the cutoff cannot resolve lambda; the message carries
/// a suggested cutoff.
IdsReport ids(const PotentialSpec& potential, double lambda, const QuadratureGrid& grid,
              double cutoff, const IdsOptions& options = {});

/// Window N(lambda + eps) - N(lambda), differenced per k-point on one grid and cutoff.
WindowReport window(const PotentialSpec& potential, double lambda, double epsilon,
                    const QuadratureGrid& grid, double cutoff, const IdsOptions& options = {});

/// The IDS window floor omega_d / (2 (2 pi)^d) * eps * lambda^{(d-2)/2}.
double window_floor(double lambda, double epsilon, int d);

struct Subwindow {
  double lower = 0.0;
  double upper = 0.0;
  double midpoint = 0.0;  // rho^2 for the subinterval
};

/// Contiguous equal-length pieces of [lambda, lambda + eps], each at most
/// 2 lambda^{(-d-3)/2} long.
std::vector<Subwindow> partition_window(double lambda, double epsilon, int d);

}  // namespace blochdos
