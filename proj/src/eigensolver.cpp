#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <fmt/format.h>

#include "blochdos/errors.hpp"
#include "blochdos/fibre.hpp"
#include "shifted_ldlt.hpp"

namespace blochdos {

namespace {

Eigen::MatrixXcd orthonormal_columns(const Eigen::MatrixXcd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(y);
  return qr.householderQ() * Eigen::MatrixXcd::Identity(y.rows(), y.cols());
}

Eigen::MatrixXcd random_block(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXcd x(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) x(i, j) = Complex{u(rng), u(rng)};
  return x;
}

}  // namespace

std::vector<BandSolution> eigenpairs_near(const FibreMatrix& matrix, double target, int count,
                                          const IterationOptions& options) {
  const Eigen::Index n = matrix.size();
  if (count < 1 || count > n) {
    throw ValidationError(fmt::format("requested {} eigenpairs of a {}x{} matrix", count, n, n));
  }
  if (!std::isfinite(target)) throw ValidationError("eigenpairs_near: target must be finite");

  const Eigen::Index block =
      std::min<Eigen::Index>(n, std::max<Eigen::Index>(options.block_size, count + 4));

  detail::ShiftedLdlt ldlt(matrix.sparse_upper());
  double shift = target;
  bool factored = false;
  for (int attempt = 0; attempt < 4 && !factored; ++attempt) {
    factored = ldlt.factorize(shift, kTieTolerance * (1.0 + std::abs(shift)));
    if (!factored) shift += 1e-8 * (1.0 + std::abs(target)) * (attempt + 1);
  }
  if (!factored) {
    throw SolverError(fmt::format("shift-invert factorization at {} is singular (min pivot {:.3e})",
                                  target, ldlt.min_pivot()));
  }

  Eigen::MatrixXcd x = orthonormal_columns(random_block(n, block, options.seed));
  Vector ritz(block);
  Vector residuals(block);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(block));
  Eigen::MatrixXcd image;

  int iteration = 0;
  bool converged = false;
  for (; iteration < options.max_iterations; ++iteration) {
    x = orthonormal_columns(ldlt.solve(x));
    image = matrix.apply(x);
    Eigen::MatrixXcd projected = x.adjoint() * image;
    projected = 0.5 * (projected + projected.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> small(projected);
    if (small.info() != Eigen::Success) throw SolverError("Rayleigh-Ritz eigensolve failed");
    ritz = small.eigenvalues();
    x = (x * small.eigenvectors()).eval();
    image = (image * small.eigenvectors()).eval();
    for (Eigen::Index j = 0; j < block; ++j) {
      residuals[j] = (image.col(j) - ritz[j] * x.col(j)).norm();
    }

    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return std::abs(ritz[a] - target) < std::abs(ritz[b] - target);
    });
    converged = true;
    for (int j = 0; j < count; ++j) {
      const auto idx = order[static_cast<std::size_t>(j)];
      if (residuals[idx] > options.tolerance * (1.0 + std::abs(ritz[idx]))) converged = false;
    }
    if (converged) break;
  }

  if (!converged) {
    for (int j = 0; j < count; ++j) {
      const auto idx = order[static_cast<std::size_t>(j)];
      if (residuals[idx] > options.accept_tolerance * (1.0 + std::abs(ritz[idx]))) {
        throw SolverError(fmt::format(
            "shift-invert iteration near {} did not converge in {} iterations: pair {} has "
            "residual {:.3e} at Ritz value {} (block {}, size {})",
            target, options.max_iterations, j, residuals[idx], ritz[idx], block, n));
      }
    }
  }

  // A Ritz value with residual r lies within r of an eigenvalue, so well-resolved Ritz
  // values bound the gap.
  auto resolved = [&](Eigen::Index idx) {
    return residuals[idx] <= 1e-8 * (1.0 + std::abs(ritz[idx]));
  };

  std::vector<BandSolution> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    const auto idx = order[static_cast<std::size_t>(j)];
    BandSolution s;
    s.zeta = ritz[idx];
    s.coeffs = x.col(idx).normalized();
    s.residual = residuals[idx];
    s.gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index other = 0; other < block; ++other) {
      if (other == idx || !resolved(other)) continue;
      s.gap = std::min(s.gap, std::abs(ritz[other] - s.zeta));
    }
    s.degenerate = s.gap < options.degeneracy_threshold * (1.0 + std::abs(s.zeta));
    out.push_back(std::move(s));
  }
  return out;
}

BandSolution eigenpair_near(const FibreMatrix& matrix, double target,
                            const IterationOptions& options) {
  if (matrix.size() == 1) return eigenpairs_near(matrix, target, 1, options).front();
  return eigenpairs_near(matrix, target, 2, options).front();
}

}  // namespace blochdos
