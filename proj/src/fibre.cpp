#include "blochdos/fibre.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "blochdos/errors.hpp"
#include "shifted_ldlt.hpp"

namespace blochdos {

PlaneWaveBasis::PlaneWaveBasis(const DualLattice& dual, Vector k, double cutoff)
    : k_(std::move(k)), cutoff_(cutoff) {
  if (!(cutoff > 0.0)) throw ValidationError(fmt::format("cutoff must be positive, got {}", cutoff));
  if (k_.size() != dual.dim()) throw ValidationError("quasimomentum dimension does not match lattice");

  struct Entry {
    IntVector n;
    Vector point;
    double norm;
  };
  std::vector<Entry> entries;
  for (auto& n : dual.geometry().coordinates_in_ball(-k_, cutoff)) {
    Vector p = dual.to_cartesian(n);
    const double norm = (p + k_).norm();
    entries.push_back({std::move(n), std::move(p), norm});
  }
  if (entries.empty()) {
    throw ValidationError(fmt::format("plane-wave basis is empty for cutoff {}", cutoff));
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.norm != b.norm) return a.norm < b.norm;
    return lexicographic_less(a.n, b.n);
  });
  indices_.reserve(entries.size());
  points_.reserve(entries.size());
  for (auto& e : entries) {
    indices_.push_back(std::move(e.n));
    points_.push_back(std::move(e.point));
  }
  build_lookup();
}

PlaneWaveBasis PlaneWaveBasis::with_k(Vector k) const {
  if (k.size() != k_.size()) throw ValidationError("quasimomentum dimension does not match basis");
  PlaneWaveBasis out = *this;
  out.k_ = std::move(k);
  return out;
}

void PlaneWaveBasis::build_lookup() {
  lookup_.clear();
  lookup_.reserve(indices_.size());
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    lookup_.emplace(indices_[i], static_cast<Eigen::Index>(i));
  }
}

std::optional<Eigen::Index> PlaneWaveBasis::find(const IntVector& n) const {
  const auto it = lookup_.find(n);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

FibreMatrix::FibreMatrix(PlaneWaveBasis basis, Storage storage, Eigen::MatrixXcd dense,
                         SparseMatrix upper)
    : basis_(std::move(basis)),
      storage_(storage),
      dense_(std::move(dense)),
      upper_(std::move(upper)) {}

Eigen::MatrixXcd FibreMatrix::dense() const {
  if (storage_ == Storage::Dense) return dense_;
  Eigen::MatrixXcd full = Eigen::MatrixXcd(upper_);
  full.triangularView<Eigen::StrictlyLower>() = full.adjoint().triangularView<Eigen::StrictlyLower>();
  return full;
}

SparseMatrix FibreMatrix::sparse_upper() const { return upper_; }

Eigen::MatrixXcd FibreMatrix::apply(const Eigen::MatrixXcd& x) const {
  if (storage_ == Storage::Dense) return dense_ * x;
  return upper_.selfadjointView<Eigen::Upper>() * x;
}

double FibreMatrix::diagonal(Eigen::Index i) const {
  if (storage_ == Storage::Dense) return dense_(i, i).real();
  return upper_.coeff(i, i).real();
}

double FibreMatrix::trace() const {
  double t = 0.0;
  for (Eigen::Index i = 0; i < size(); ++i) t += diagonal(i);
  return t;
}

double FibreMatrix::hermiticity_defect() const {
  if (storage_ == Storage::Sparse) {
    // Only the upper triangle is stored; Hermitian by construction apart from the diagonal.
    double defect = 0.0;
    for (Eigen::Index i = 0; i < size(); ++i) defect = std::max(defect, std::abs(upper_.coeff(i, i).imag()));
    return defect;
  }
  return (dense_ - dense_.adjoint()).cwiseAbs().maxCoeff();
}

FibreMatrix assemble(const PotentialSpec& potential, const Vector& k, double cutoff,
                     const FibreOptions& options) {
  return assemble(potential, PlaneWaveBasis(potential.dual(), k, cutoff), options);
}

FibreMatrix assemble(const PotentialSpec& potential, const PlaneWaveBasis& basis,
                     const FibreOptions& options) {
  if (basis.dim() != potential.dim()) {
    throw ValidationError("basis and potential live on lattices of different dimension");
  }
  const Eigen::Index n = basis.size();
  const Storage storage =
      options.storage.value_or(n > options.dense_threshold ? Storage::Sparse : Storage::Dense);
  const double factor =
      options.strict_transcription ? 1.0 : 1.0 / std::sqrt(potential.cell_volume());
  const double c0 = potential.coefficient(IntVector::Zero(potential.dim())).real() * factor;

  std::vector<const FourierCoefficient*> off_diagonal;
  for (const auto& c : potential.coefficients()) {
    if (!c.n.isZero()) off_diagonal.push_back(&c);
  }

  std::vector<Eigen::Triplet<Complex>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * (1 + off_diagonal.size() / 2));
  Eigen::MatrixXcd dense;
  if (storage == Storage::Dense) dense = Eigen::MatrixXcd::Zero(n, n);

  for (Eigen::Index col = 0; col < n; ++col) {
    const double kinetic = (basis.point(col) + basis.k()).squaredNorm();
    triplets.emplace_back(col, col, Complex{kinetic + c0, 0.0});
    if (storage == Storage::Dense) dense(col, col) = Complex{kinetic + c0, 0.0};
    for (const auto* c : off_diagonal) {
      // Row index n_row = n_col + s carries V_{n_row - n_col} = V_s.
      const auto row = basis.find(basis.indices()[static_cast<std::size_t>(col)] + c->n);
      if (!row) continue;
      const Complex value = c->value * factor;
      if (*row < col) triplets.emplace_back(*row, col, value);
      if (storage == Storage::Dense) dense(*row, col) = value;
    }
  }
  SparseMatrix upper(n, n);
  upper.setFromTriplets(triplets.begin(), triplets.end());
  upper.makeCompressed();

  FibreMatrix matrix(basis, storage, std::move(dense), std::move(upper));
  if (storage == Storage::Dense && matrix.hermiticity_defect() != 0.0) {
    throw SymmetryError(fmt::format("assembled fibre matrix is not Hermitian (defect {:.3e})",
                                    matrix.hermiticity_defect()));
  }
  return matrix;
}

std::vector<BandSolution> solve_dense(const FibreMatrix& matrix) {
  const Eigen::MatrixXcd a = matrix.dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(a);
  if (solver.info() != Eigen::Success) {
    throw SolverError(fmt::format("dense Hermitian eigensolver failed for a {}x{} fibre matrix",
                                  a.rows(), a.cols()));
  }
  const Vector& values = solver.eigenvalues();
  const Eigen::MatrixXcd& vectors = solver.eigenvectors();
  const Eigen::MatrixXcd image = a * vectors;

  const Eigen::Index n = values.size();
  std::vector<BandSolution> out(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    auto& s = out[static_cast<std::size_t>(j)];
    s.zeta = values[j];
    s.coeffs = vectors.col(j);
    s.residual = (image.col(j) - values[j] * vectors.col(j)).norm();
    double gap = std::numeric_limits<double>::infinity();
    if (j > 0) gap = std::min(gap, values[j] - values[j - 1]);
    if (j + 1 < n) gap = std::min(gap, values[j + 1] - values[j]);
    s.gap = gap;
    s.degenerate = gap < kDegeneracyThreshold * (1.0 + std::abs(s.zeta));
  }
  return out;
}

Vector dense_eigenvalues(const FibreMatrix& matrix) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(matrix.dense(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw SolverError(fmt::format("dense Hermitian eigenvalue solve failed for a {}x{} fibre matrix",
                                  matrix.size(), matrix.size()));
  }
  return solver.eigenvalues();
}

namespace {

CountResult count_dense(const FibreMatrix& matrix, double lambda) {
  const Vector values = dense_eigenvalues(matrix);

  CountResult out;
  out.lambda_used = lambda;
  const double tie = kTieTolerance * (1.0 + std::abs(lambda));
  for (Eigen::Index j = 0; j < values.size(); ++j) {
    if (std::abs(values[j] - lambda) <= tie) {
      out.perturbed = true;
      out.lambda_used = lambda + kTiePerturbation * (1.0 + std::abs(lambda));
      break;
    }
  }
  out.count = static_cast<std::int64_t>(
      std::count_if(values.begin(), values.end(), [&](double v) { return v < out.lambda_used; }));
  return out;
}

CountResult count_inertia(detail::ShiftedLdlt& ldlt, const FibreMatrix& matrix, double lambda) {
  auto negatives_at = [&](double shift) -> std::optional<std::int64_t> {
    if (!ldlt.factorize(shift, 0.0)) return std::nullopt;
    return ldlt.negatives();
  };
  CountResult out;
  out.lambda_used = lambda;
  const double tie = kTieTolerance * (1.0 + std::abs(lambda));
  const auto below = negatives_at(lambda - tie);
  const auto above = negatives_at(lambda + tie);
  if (below && above && *below == *above) {
    out.count = *below;
    return out;
  }
  out.perturbed = true;
  for (int attempt = 0; attempt < 4; ++attempt) {
    out.lambda_used += kTiePerturbation * (1.0 + std::abs(lambda));
    if (const auto count = negatives_at(out.lambda_used)) {
      out.count = *count;
      return out;
    }
  }
  throw SolverError(fmt::format(
      "inertia count at lambda = {} kept hitting a vanishing pivot (last |d| = {:.3e}, size {})",
      lambda, ldlt.min_pivot(), matrix.size()));
}

}  // namespace

CountResult count_below(const FibreMatrix& matrix, double lambda, CountMethod method) {
  if (!std::isfinite(lambda)) {
    // lambda = -inf counts nothing, +inf counts everything.
    if (lambda < 0) return {0, false, lambda};
    if (lambda > 0) return {static_cast<std::int64_t>(matrix.size()), false, lambda};
    throw ValidationError("count_below: lambda is NaN");
  }
  if (method == CountMethod::Dense) return count_dense(matrix, lambda);
  detail::ShiftedLdlt ldlt(matrix.sparse_upper());
  return count_inertia(ldlt, matrix, lambda);
}

std::vector<CountResult> count_below(const FibreMatrix& matrix, const std::vector<double>& lambdas) {
  std::vector<CountResult> out;
  out.reserve(lambdas.size());
  std::optional<detail::ShiftedLdlt> ldlt;
  for (double lambda : lambdas) {
    if (!std::isfinite(lambda)) {
      out.push_back(count_below(matrix, lambda));
      continue;
    }
    if (!ldlt) ldlt.emplace(matrix.sparse_upper());
    out.push_back(count_inertia(*ldlt, matrix, lambda));
  }
  return out;
}

Vector group_velocity(const BandSolution& solution, const PlaneWaveBasis& basis,
                      double degeneracy_threshold) {
  if (solution.coeffs.size() != basis.size()) {
    throw ValidationError("eigenvector length does not match the plane-wave basis");
  }
  if (solution.gap < degeneracy_threshold * (1.0 + std::abs(solution.zeta))) {
    throw DegeneracyError(fmt::format(
        "eigenvalue {} is not simple (gap {:.3e}); the band velocity is undefined", solution.zeta,
        solution.gap));
  }
  Vector v = Vector::Zero(basis.dim());
  for (Eigen::Index i = 0; i < basis.size(); ++i) {
    v += std::norm(solution.coeffs[i]) * (basis.point(i) + basis.k());
  }
  return 2.0 * v;
}

double suggest_cutoff(double lambda_max, double v_upper, double buffer) {
  if (!(lambda_max > 0.0)) throw ValidationError("suggest_cutoff: lambda_max must be positive");
  if (v_upper < 0.0 || buffer < 0.0) {
    throw ValidationError("suggest_cutoff: v and buffer must be non-negative");
  }
  return std::sqrt(lambda_max + 40.0 * v_upper) + buffer;
}

}  // namespace blochdos
