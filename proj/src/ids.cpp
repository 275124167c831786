#include "blochdos/ids.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>

#include <fmt/format.h>

#include "blochdos/errors.hpp"

namespace blochdos {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double surface_area(int d) { return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d); }

struct GridCounts {
  // counts[i * levels + j]: eigenvalues of H(k_i) below lambda_j
  std::vector<std::int64_t> counts;
  std::int64_t perturbations = 0;
};

std::vector<std::int64_t> counts_at(const PotentialSpec& potential, const Vector& k, double cutoff,
                                    const std::vector<double>& levels, const FibreOptions& fibre,
                                    std::int64_t& perturbations) {
  const FibreMatrix matrix = assemble(potential, k, cutoff, fibre);
  std::vector<std::int64_t> out;
  out.reserve(levels.size());
  for (const auto& r : count_below(matrix, levels)) {
    out.push_back(r.count);
    if (r.perturbed) ++perturbations;
  }
  return out;
}

void require_resolvable(const PotentialSpec& potential, const std::vector<double>& levels,
                        const QuadratureGrid& grid, double cutoff, const IdsOptions& options) {
  const double v = sup_norm_upper(potential);
  const double top = *std::max_element(levels.begin(), levels.end());
  const double needed = std::sqrt(std::max(0.0, top + 40.0 * v));
  const double suggested = needed + options.buffer;
  if (cutoff < needed) {
    throw PreconditionError(fmt::format(
        "cutoff {} cannot resolve eigenvalues below {} with v = {} (need at least {}); "
        "suggested cutoff {}",
        cutoff, top, v, needed, suggested));
  }
  if (!options.check_stability || options.buffer <= 0.0 || grid.points().empty()) return;

  FibreOptions fibre = options.fibre;
  fibre.storage = Storage::Sparse;
  const std::size_t total = grid.points().size();
  const std::size_t probes = std::min<std::size_t>(4, total);
  std::int64_t ignored = 0;
  for (std::size_t p = 0; p < probes; ++p) {
    const Vector& k = grid.points()[p * total / probes];
    const auto base = counts_at(potential, k, cutoff, levels, fibre, ignored);
    const auto wider = counts_at(potential, k, cutoff + options.buffer, levels, fibre, ignored);
    if (base != wider) {
      throw PreconditionError(fmt::format(
          "eigenvalue counts change when the cutoff grows from {} to {}; suggested cutoff {}",
          cutoff, cutoff + options.buffer, cutoff + 2.0 * options.buffer));
    }
  }
}

GridCounts count_grid(const PotentialSpec& potential, const QuadratureGrid& grid, double cutoff,
                      const std::vector<double>& levels, const IdsOptions& options) {
  if (options.workers < 1) throw ValidationError("workers must be at least 1");
  FibreOptions fibre = options.fibre;
  fibre.storage = Storage::Sparse;

  const auto total = static_cast<std::int64_t>(grid.points().size());
  const auto width = static_cast<std::int64_t>(levels.size());
  GridCounts out;
  out.counts.assign(static_cast<std::size_t>(total * width), 0);
  std::vector<std::int64_t> perturbations(static_cast<std::size_t>(total), 0);
  std::exception_ptr failure;

#pragma omp parallel for schedule(static) num_threads(options.workers)
  for (std::int64_t i = 0; i < total; ++i) {
    try {
      std::int64_t local = 0;
      const auto c = counts_at(potential, grid.points()[static_cast<std::size_t>(i)], cutoff, levels,
                               fibre, local);
      std::copy(c.begin(), c.end(), out.counts.begin() + i * width);
      perturbations[static_cast<std::size_t>(i)] = local;
    } catch (...) {
#pragma omp critical(blochdos_ids_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  for (auto p : perturbations) out.perturbations += p;
  return out;
}

}  // namespace

FreeReference free_reference(double lambda, int d) {
  if (d < 2) throw ValidationError("free_reference: dimension must be at least 2");
  if (lambda < 0.0) throw ValidationError("free_reference: lambda must be non-negative");
  FreeReference out;
  out.omega_d = surface_area(d);
  const double scale = std::pow(kTwoPi, -d) * out.omega_d;
  out.n0 = scale / d * std::pow(lambda, 0.5 * d);
  out.g0 = 0.5 * scale * std::pow(lambda, 0.5 * (d - 2));
  return out;
}

QuadratureGrid QuadratureGrid::uniform(const DualLattice& dual, int per_dim) {
  if (per_dim < 1) throw ValidationError("quadrature grid needs at least one point per dimension");
  const int d = dual.dim();
  QuadratureGrid grid;
  grid.per_dim_ = per_dim;
  const double total = std::pow(static_cast<double>(per_dim), d);
  if (total > 1e9) throw ValidationError("quadrature grid is too large");
  grid.weight_ = 1.0 / (dual.primal().cell_volume() * total);
  grid.points_.reserve(static_cast<std::size_t>(total));

  IntVector idx = IntVector::Zero(d);
  while (true) {
    const Vector xi = dual.basis().transpose() * (idx.cast<double>() / per_dim);
    grid.points_.push_back(decompose(xi, dual).fractional_part);
    int i = 0;
    while (i < d) {
      if (++idx[i] < per_dim) break;
      idx[i] = 0;
      ++i;
    }
    if (i == d) break;
  }
  return grid;
}

IdsReport ids(const PotentialSpec& potential, double lambda, const QuadratureGrid& grid,
              double cutoff, const IdsOptions& options) {
  if (!std::isfinite(lambda)) throw ValidationError("ids: lambda must be finite");
  const std::vector<double> levels{lambda};
  require_resolvable(potential, levels, grid, cutoff, options);
  const auto counted = count_grid(potential, grid, cutoff, levels, options);

  IdsReport r;
  r.lambda = lambda;
  r.grid = grid.per_dim();
  r.cutoff = cutoff;
  r.free_reference = lambda > 0.0 ? free_reference(lambda, potential.dim()).n0 : 0.0;
  r.tie_perturbations = counted.perturbations;
  if (!counted.counts.empty()) {
    const auto [lo, hi] = std::minmax_element(counted.counts.begin(), counted.counts.end());
    r.counts_min = *lo;
    r.counts_max = *hi;
  }
  for (auto c : counted.counts) r.count_total += c;
  r.value = grid.weight() * static_cast<double>(r.count_total);
  return r;
}

double window_floor(double lambda, double epsilon, int d) {
  return surface_area(d) / (2.0 * std::pow(kTwoPi, d)) * epsilon * std::pow(lambda, 0.5 * (d - 2));
}

WindowReport window(const PotentialSpec& potential, double lambda, double epsilon,
                    const QuadratureGrid& grid, double cutoff, const IdsOptions& options) {
  if (!std::isfinite(lambda) || !std::isfinite(epsilon)) {
    throw ValidationError("window: lambda and epsilon must be finite");
  }
  if (epsilon < 0.0) throw ValidationError("window: epsilon must be non-negative");

  WindowReport r;
  r.lambda = lambda;
  r.epsilon = epsilon;
  r.grid = grid.per_dim();
  r.cutoff = cutoff;
  r.floor = window_floor(lambda, epsilon, potential.dim());
  if (epsilon == 0.0) {
    r.ratio = std::nan("");
    return r;
  }

  const std::vector<double> levels{lambda, lambda + epsilon};
  require_resolvable(potential, levels, grid, cutoff, options);
  const auto counted = count_grid(potential, grid, cutoff, levels, options);
  for (std::size_t i = 0; i < counted.counts.size(); i += 2) {
    r.count_difference += counted.counts[i + 1] - counted.counts[i];
  }
  r.tie_perturbations = counted.perturbations;
  r.window = grid.weight() * static_cast<double>(r.count_difference);
  r.ratio = r.window / r.floor;
  return r;
}

std::vector<Subwindow> partition_window(double lambda, double epsilon, int d) {
  if (!(epsilon > 0.0)) throw ValidationError("partition_window: epsilon must be positive");
  if (!(lambda > 0.0)) throw ValidationError("partition_window: lambda must be positive");
  if (d < 2) throw ValidationError("partition_window: dimension must be at least 2");
  const double longest = 2.0 * std::pow(lambda, -0.5 * (d + 3));
  // Guard the ceiling against ratios that are integral up to rounding.
  const double ratio = epsilon / longest;
  const auto pieces = static_cast<std::int64_t>(std::max(1.0, std::ceil(ratio * (1.0 - 1e-12))));
  if (pieces > 100'000'000) {
    throw ValidationError(fmt::format("partition_window: {} pieces is too many", pieces));
  }

  std::vector<Subwindow> out(static_cast<std::size_t>(pieces));
  const double step = epsilon / static_cast<double>(pieces);
  double lower = lambda;
  for (std::int64_t i = 0; i < pieces; ++i) {
    const double upper = i + 1 == pieces ? lambda + epsilon : lambda + step * static_cast<double>(i + 1);
    out[static_cast<std::size_t>(i)] = {lower, upper, 0.5 * (lower + upper)};
    lower = upper;
  }
  return out;
}

}  // namespace blochdos
