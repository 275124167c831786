#include "blochdos/decay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "blochdos/errors.hpp"

namespace blochdos {

namespace {

void require_eta(double eta) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw ValidationError(fmt::format("eta must lie in (0, 1), got {}", eta));
  }
}

void require_high_energy(const DecayConstants& c, double zeta) {
  if (zeta < c.zeta0) {
    throw PreconditionError(fmt::format(
        "eigenvalue {} is below zeta0 = {} (short by {}); the estimates only hold for "
        "eigenvalues zeta >= zeta0(eta = {})",
        zeta, c.zeta0, c.zeta0 - zeta, c.eta));
  }
}

}  // namespace

double DecayConstants::bound(double n_norm) const {
  return M() * std::pow(kappa, -m) * std::pow(n_norm, -0.5 * (3 * m + 1));
}

std::vector<double> decay_chain(const PotentialSpec& potential, int d, double W, int m) {
  if (m < 1) throw ValidationError("decay chain needs m >= 1");
  const double v0 = sobolev_seminorm(potential, 0.0);
  std::vector<double> chain{6.0 * v0};
  for (int j = 2; j <= m; ++j) {
    const double inner = std::pow(2.0, 1.5 * j - 1.0) * std::sqrt(W) * v0 * chain.back();
    const double outer = sobolev_seminorm(potential, 1.5 * (j - 1) * d);
    chain.push_back(6.0 * (inner + outer));
  }
  return chain;
}

DecayConstants decay_constants(const PotentialSpec& potential, int d, double eta, double Q, double W) {
  require_eta(eta);
  if (d < 2) throw ValidationError("decay constants need d >= 2");
  DecayConstants c;
  c.d = d;
  c.eta = eta;
  c.m = (d + 1) / 3 + 1;
  c.kappa = eta / (2 * c.m + 1);
  c.Q = Q;
  c.W = W;
  const double first = 36.0 * Q * Q / (c.kappa * c.kappa);
  const double second = std::pow(1.0 + c.m * c.kappa, 2.0 / (d - 1)) *
                        std::pow(c.kappa, -2.0 * d / (d - 1));
  c.zeta0 = std::max(first, second);
  c.chain = decay_chain(potential, d, W, c.m);
  return c;
}

DecayConstants decay_constants(const PotentialSpec& potential, double eta) {
  const auto& dual = potential.dual();
  return decay_constants(potential, dual.dim(), eta, brillouin_radius(dual).value,
                         packing_constant_W(dual));
}

DecayReport verify_decay(const PotentialSpec& potential, const Vector& k, double band_target,
                         double eta, double cutoff, const VerifyOptions& options) {
  DecayReport r;
  r.constants = decay_constants(potential, eta);
  r.k = k;
  r.cutoff = cutoff;

  const FibreMatrix matrix = assemble(potential, k, cutoff, options.fibre);
  const BandSolution band = eigenpair_near(matrix, band_target, options.iteration);
  r.zeta = band.zeta;
  r.gap = band.gap;
  r.residual = band.residual;
  r.degenerate = band.degenerate;
  require_high_energy(r.constants, r.zeta);

  r.threshold_radius = r.constants.threshold_factor() * std::sqrt(r.zeta);
  if (cutoff < 1.15 * r.threshold_radius) {
    throw PreconditionError(fmt::format(
        "cutoff {} leaves no reliable shell beyond |n| = {}; need cutoff >= {}", cutoff,
        r.threshold_radius, 1.15 * r.threshold_radius));
  }
  r.shell_outer = 0.9 * cutoff;

  r.margin_min = std::numeric_limits<double>::infinity();
  const auto& basis = matrix.basis();
  for (Eigen::Index i = 0; i < basis.size(); ++i) {
    const double norm = basis.point(i).norm();
    if (norm < r.threshold_radius || norm > r.shell_outer) continue;
    ++r.checked;
    const double magnitude = std::abs(band.coeffs[i]);
    if (magnitude <= kCoefficientNoiseFloor) continue;
    const double bound = r.constants.bound(norm);
    r.margin_min = std::min(r.margin_min, bound / magnitude);
    if (!(magnitude < bound)) {
      r.violations.push_back({basis.indices()[static_cast<std::size_t>(i)], magnitude, bound});
    }
  }
  return r;
}

GradientReport verify_gradient(const PotentialSpec& potential, const Vector& k, double band_target,
                               double eta, double cutoff, const VerifyOptions& options) {
  GradientReport r;
  r.constants = decay_constants(potential, eta);
  r.k = k;
  r.cutoff = cutoff;
  r.step = options.fd_step;
  if (!(r.step > 0.0)) throw ValidationError("finite-difference step must be positive");

  const FibreMatrix matrix = assemble(potential, k, cutoff, options.fibre);
  const BandSolution band = eigenpair_near(matrix, band_target, options.iteration);
  r.zeta = band.zeta;
  r.gap = band.gap;
  require_high_energy(r.constants, r.zeta);
  r.hf_velocity = group_velocity(band, matrix.basis(), options.iteration.degeneracy_threshold);

  const int d = potential.dim();
  r.fd_velocity = Vector::Zero(d);
  for (int i = 0; i < d; ++i) {
    double sides[2] = {0.0, 0.0};
    for (int s = 0; s < 2; ++s) {
      Vector shifted = k;
      shifted[i] += s == 0 ? r.step : -r.step;
      const FibreMatrix moved = assemble(potential, matrix.basis().with_k(shifted), options.fibre);
      const auto near = eigenpairs_near(moved, band.zeta, 2, options.iteration);
      // near[0] is the closest eigenvalue to zeta(k); it is the same band only if it is
      // clearly closer than any competitor.
      const double moved_by = std::abs(near[0].zeta - band.zeta);
      const double rival = std::abs(near[1].zeta - band.zeta);
      if (!(2.0 * moved_by < rival)) {
        throw TrackingError(fmt::format(
            "band at {} cannot be tracked along axis {} with step {} (shift {:.3e}, nearest "
            "rival {:.3e}); retry with a smaller step",
            band.zeta, i, r.step, moved_by, rival));
      }
      sides[s] = near[0].zeta;
    }
    r.fd_velocity[i] = (sides[0] - sides[1]) / (2.0 * r.step);
  }

  r.bound = 2.0 * (1.0 + eta) * std::sqrt(r.zeta);
  r.bound_ok = r.hf_velocity.norm() <= r.bound;
  r.relative_difference = (r.hf_velocity - r.fd_velocity).norm() / (1.0 + r.hf_velocity.norm());
  return r;
}

}  // namespace blochdos
