#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "blochdos/potential.hpp"
#include "blochdos/types.hpp"

namespace blochdos {

/// Plane waves exp(i<n + k, x>) with |n + k| <= cutoff, ordered by |n + k| then
/// lexicographically in dual coordinates.
class PlaneWaveBasis {
 public:
  /// Throws ValidationError if cutoff <= 0 or the ball contains no dual point.
  PlaneWaveBasis(const DualLattice& dual, Vector k, double cutoff);

  /// Same index set, different quasimomentum. Used for finite differences in k, where
  /// the truncation must not change between the two evaluations.
  PlaneWaveBasis with_k(Vector k) const;

  const Vector& k() const { return k_; }
  double cutoff() const { return cutoff_; }
  int dim() const { return static_cast<int>(k_.size()); }
  Eigen::Index size() const { return static_cast<Eigen::Index>(indices_.size()); }

  const std::vector<IntVector>& indices() const { return indices_; }
  /// Cartesian dual point n of basis function i.
  const Vector& point(Eigen::Index i) const { return points_[static_cast<std::size_t>(i)]; }
  std::optional<Eigen::Index> find(const IntVector& n) const;

 private:
  PlaneWaveBasis() = default;
  void build_lookup();

  Vector k_;
  double cutoff_ = 0.0;
  std::vector<IntVector> indices_;
  std::vector<Vector> points_;
  std::unordered_map<IntVector, Eigen::Index, IntVectorHash, IntVectorEqual> lookup_;
};

enum class Storage { Dense, Sparse };

using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::ColMajor>;

struct FibreOptions {
  /// Bases larger than this are stored sparse unless `storage` forces a choice.
  Eigen::Index dense_threshold = 2000;
  std::optional<Storage> storage;
  /// Drop the (vol Omega)^{-1/2} convolution factor on off-diagonal entries, i.e. use
  /// sum_l V_{n-l} psi_l literally. Only for comparison; the operator needs the factor.
  bool strict_transcription = false;
};

/// Truncated plane-wave matrix of H(k) = (D + k)^2 + V:
///   A_{nn} = |n + k|^2 + c0,   A_{nl} = (vol Omega)^{-1/2} V_{n-l}  (n != l).
/// Sparse storage keeps only the upper triangle.
class FibreMatrix {
 public:
  FibreMatrix(PlaneWaveBasis basis, Storage storage, Eigen::MatrixXcd dense, SparseMatrix upper);

  const PlaneWaveBasis& basis() const { return basis_; }
  Storage storage() const { return storage_; }
  Eigen::Index size() const { return basis_.size(); }

  /// Full Hermitian matrix (materialized from sparse storage if needed).
  Eigen::MatrixXcd dense() const;
  /// Upper triangle including the diagonal, compressed column storage.
  SparseMatrix sparse_upper() const;

  /// y = A x
  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& x) const;

  double diagonal(Eigen::Index i) const;
  double trace() const;
  /// max |A_{nl} - conj(A_{ln})|
  double hermiticity_defect() const;

 private:
  PlaneWaveBasis basis_;
  Storage storage_;
  Eigen::MatrixXcd dense_;
  SparseMatrix upper_;
};

FibreMatrix assemble(const PotentialSpec& potential, const Vector& k, double cutoff,
                     const FibreOptions& options = {});
FibreMatrix assemble(const PotentialSpec& potential, const PlaneWaveBasis& basis,
                     const FibreOptions& options = {});

/// One eigenpair of a fibre matrix. `coeffs[i]` is psi_n for n = basis.indices()[i].
struct BandSolution {
  double zeta = 0.0;
  ComplexVector coeffs;
  double gap = 0.0;       // distance to the nearest other computed eigenvalue
  double residual = 0.0;  // ||(A - zeta) psi||
  bool degenerate = false;
};

/// Relative simplicity threshold: an eigenvalue is treated as degenerate when its gap
/// is below kDegeneracyThreshold * (1 + |zeta|).
inline constexpr double kDegeneracyThreshold = 1e-6;

/// All eigenpairs in ascending order.
std::vector<BandSolution> solve_dense(const FibreMatrix& matrix);

/// Eigenvalues only, ascending.
Vector dense_eigenvalues(const FibreMatrix& matrix);

enum class CountMethod { Inertia, Dense };

struct CountResult {
  std::int64_t count = 0;
  bool perturbed = false;  // lambda was nudged off an eigenvalue
  double lambda_used = 0.0;
};

/// Tie rule for counting: an eigenvalue within kTieTolerance * (1 + |lambda|) of lambda
/// moves lambda up by kTiePerturbation * (1 + |lambda|). The inertia path detects a tie
/// when the counts at lambda -/+ the tolerance differ.
inline constexpr double kTieTolerance = 1e-11;
inline constexpr double kTiePerturbation = 1e-9;

/// #{j : lambda_j < lambda}. The inertia path counts negative pivots of a sparse
/// LDL^H factorization of A - lambda I (Sylvester's law of inertia); the dense path
/// counts eigenvalues from solve_dense.
CountResult count_below(const FibreMatrix& matrix, double lambda,
                        CountMethod method = CountMethod::Inertia);

/// Counts at several thresholds, sharing one symbolic factorization.
std::vector<CountResult> count_below(const FibreMatrix& matrix, const std::vector<double>& lambdas);

struct IterationOptions {
  int block_size = 16;
  int max_iterations = 2000;
  /// Target residual, relative to 1 + |zeta|.
  double tolerance = 1e-11;
  /// Residual still accepted when max_iterations is reached.
  double accept_tolerance = 1e-9;
  double degeneracy_threshold = kDegeneracyThreshold;
  std::uint64_t seed = 0x5eed;
};

/// Shift-invert subspace iteration: the `count` eigenpairs nearest `target`, ordered
/// by distance to it. Throws SolverError on non-convergence.
std::vector<BandSolution> eigenpairs_near(const FibreMatrix& matrix, double target, int count,
                                          const IterationOptions& options = {});

/// The eigenpair nearest `target`; its gap comes from also resolving the next-nearest
/// eigenvalue. Near-degenerate pairs are flagged, not rejected.
BandSolution eigenpair_near(const FibreMatrix& matrix, double target,
                            const IterationOptions& options = {});

/// Hellmann-Feynman band velocity grad_k zeta = 2 sum_n (n + k) |psi_n|^2.
/// Throws DegeneracyError when the gap is below the simplicity threshold.
Vector group_velocity(const BandSolution& solution, const PlaneWaveBasis& basis,
                      double degeneracy_threshold = kDegeneracyThreshold);

/// sqrt(lambda_max + 40 v) + buffer: the plane waves needed to resolve every
/// eigenvalue below lambda_max plus a safety margin.
double suggest_cutoff(double lambda_max, double v_upper, double buffer);

}  // namespace blochdos
