#include "blochdos/geometry.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "blochdos/errors.hpp"

namespace blochdos {

namespace {

constexpr int kRadialProbes = 16;
constexpr std::int64_t kChunk = 4096;

std::vector<Vector> resonance_directions(const DualLattice& dual, double radius) {
  std::vector<Vector> out;
  for (const auto& p : points_in_ball(dual, radius, true)) out.push_back(p.cartesian / p.norm);
  return out;
}

bool projections_exceed(const Vector& xi, double threshold, const std::vector<Vector>& directions) {
  for (const auto& u : directions) {
    if (!(std::abs(xi.dot(u)) > threshold)) return false;
  }
  return true;
}

}  // namespace

StructuralConstants structural_constants(double rho, int d) {
  if (!(rho > 1.0)) throw ValidationError(fmt::format("structural constants need rho > 1, got {}", rho));
  if (d < 2) throw ValidationError("structural constants need d >= 2");
  StructuralConstants c;
  c.R = std::pow(rho, 1.0 / (36.0 * d * d * (d + 2)));
  c.M = 5 * d * d + 7 * d;
  return c;
}

GeometryParams GeometryParams::make(double rho, double v, int d, double theta_radius) {
  if (!(rho > 0.0)) throw ValidationError("rho must be positive");
  if (!(v >= 0.0)) throw ValidationError("v must be non-negative");
  if (d < 2) throw ValidationError("dimension must be at least 2");
  if (!(theta_radius > 0.0)) throw ValidationError("theta_radius must be positive");
  GeometryParams p;
  p.rho = rho;
  p.v = v;
  p.d = d;
  p.theta_radius = theta_radius;
  p.j_lower = rho * rho - 20.0 * v;
  p.j_upper = rho * rho + 20.0 * v;
  return p;
}

GeometryParams GeometryParams::with_structural_theta(double rho, double v, int d) {
  const auto c = structural_constants(rho, d);
  return make(rho, v, d, 6.0 * c.M * c.R);
}

bool in_A(const Vector& xi, const GeometryParams& params) {
  return std::abs(xi.squaredNorm() - params.lambda()) <= 40.0 * params.v;
}

bool in_B(const Vector& xi, const GeometryParams& params, const DualLattice& dual) {
  if (!in_A(xi, params)) return false;
  return projections_exceed(xi, std::sqrt(params.rho), resonance_directions(dual, params.theta_radius));
}

FractionReport regular_direction_fraction(const GeometryParams& params, const DualLattice& dual,
                                          std::int64_t samples, std::uint64_t seed, int workers) {
  if (samples < 1000) throw ValidationError("regular_direction_fraction needs at least 1000 samples");
  if (workers < 1) throw ValidationError("workers must be at least 1");
  if (dual.dim() != params.d) throw ValidationError("geometry dimension does not match lattice");

  const auto directions = resonance_directions(dual, params.theta_radius);
  const double threshold = std::sqrt(params.rho);
  const double r_min = std::sqrt(std::max(0.0, params.lambda() - 40.0 * params.v));
  const double r_max = std::sqrt(params.lambda() + 40.0 * params.v);
  std::vector<double> radii(kRadialProbes);
  for (int j = 0; j < kRadialProbes; ++j) {
    radii[static_cast<std::size_t>(j)] = r_min + (r_max - r_min) * j / (kRadialProbes - 1);
  }

  const std::int64_t chunks = (samples + kChunk - 1) / kChunk;
  std::vector<std::int64_t> hits(static_cast<std::size_t>(chunks), 0);

#pragma omp parallel for schedule(static) num_threads(workers)
  for (std::int64_t c = 0; c < chunks; ++c) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    const std::int64_t begin = c * kChunk;
    const std::int64_t end = std::min(samples, begin + kChunk);
    std::int64_t local = 0;
    Vector u(params.d);
    for (std::int64_t s = begin; s < end; ++s) {
      double norm = 0.0;
      do {
        for (int i = 0; i < params.d; ++i) u[i] = normal(rng);
        norm = u.norm();
      } while (norm == 0.0);
      u /= norm;
      bool regular = true;
      for (double r : radii) {
        if (!projections_exceed(r * u, threshold, directions)) {
          regular = false;
          break;
        }
      }
      if (regular) ++local;
    }
    hits[static_cast<std::size_t>(c)] = local;
  }

  FractionReport out;
  out.samples = samples;
  for (auto h : hits) out.regular += h;
  out.fraction = static_cast<double>(out.regular) / static_cast<double>(samples);
  out.ci_halfwidth = 1.96 * std::sqrt(out.fraction * (1.0 - out.fraction) / static_cast<double>(samples));
  return out;
}

}  // namespace blochdos
