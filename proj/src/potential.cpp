#include "blochdos/potential.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "blochdos/errors.hpp"

namespace blochdos {

namespace {

double coefficient_norm(const DualLattice& dual, const IntVector& n) {
  return dual.to_cartesian(n).norm();
}

}  // namespace

PotentialSpec::PotentialSpec(DualLattice dual, std::vector<FourierCoefficient> coeffs,
                             double hermitian_tol)
    : dual_(std::move(dual)) {
  const int d = dual_.dim();
  std::unordered_map<IntVector, Complex, IntVectorHash, IntVectorEqual> merged;
  merged.emplace(IntVector::Zero(d), Complex{0.0, 0.0});
  for (const auto& c : coeffs) {
    if (c.n.size() != d) {
      throw ValidationError(
          fmt::format("Fourier index has dimension {}, lattice has {}", c.n.size(), d));
    }
    if (!std::isfinite(c.value.real()) || !std::isfinite(c.value.imag())) {
      throw ValidationError("non-finite Fourier coefficient");
    }
    merged[c.n] += c.value;
  }

  std::vector<IntVector> keys;
  for (const auto& [n, v] : merged) keys.push_back(n);
  for (const auto& n : keys) merged.try_emplace(IntVector(-n), Complex{});

  double total = 0.0;
  for (const auto& [n, v] : merged) total += std::abs(v);
  for (const auto& [n, v] : merged) {
    const IntVector minus = -n;
    const auto it = merged.find(minus);
    const Complex partner = it == merged.end() ? Complex{} : it->second;
    if (std::abs(v - std::conj(partner)) > hermitian_tol * std::max(1.0, total)) {
      throw SymmetryError(fmt::format(
          "Fourier coefficients are not Hermitian: V_n != conj(V_-n) at n = ({})",
          fmt::join(n.data(), n.data() + n.size(), ", ")));
    }
  }

  // Symmetrize so that V_{-n} == conj(V_n) holds bit-exactly; assembled fibre
  // matrices are then exactly Hermitian.
  std::unordered_map<IntVector, Complex, IntVectorHash, IntVectorEqual> symmetric;
  for (const auto& [n, v] : merged) {
    symmetric.emplace(n, 0.5 * (v + std::conj(merged.at(IntVector(-n)))));
  }

  coeffs_.reserve(symmetric.size());
  for (auto& [n, v] : symmetric) {
    // Exact zeros off the origin carry no information.
    if (v == Complex{} && !n.isZero()) continue;
    coeffs_.push_back({n, v});
  }
  std::sort(coeffs_.begin(), coeffs_.end(), [&](const auto& a, const auto& b) {
    const double na = coefficient_norm(dual_, a.n);
    const double nb = coefficient_norm(dual_, b.n);
    if (na != nb) return na < nb;
    return lexicographic_less(a.n, b.n);
  });
  for (std::size_t i = 0; i < coeffs_.size(); ++i) index_.emplace(coeffs_[i].n, i);
}

PotentialSpec PotentialSpec::zero(DualLattice dual) { return PotentialSpec(std::move(dual), {}); }

PotentialSpec PotentialSpec::cosine_sum(DualLattice dual,
                                        const std::vector<std::pair<IntVector, double>>& terms) {
  const double root_volume = std::sqrt(dual.primal().cell_volume());
  std::vector<FourierCoefficient> coeffs;
  for (const auto& [n, amplitude] : terms) {
    if (n.isZero()) {
      coeffs.push_back({n, Complex{amplitude * root_volume, 0.0}});
      continue;
    }
    coeffs.push_back({n, Complex{0.5 * amplitude * root_volume, 0.0}});
    coeffs.push_back({IntVector(-n), Complex{0.5 * amplitude * root_volume, 0.0}});
  }
  return PotentialSpec(std::move(dual), std::move(coeffs));
}

Complex PotentialSpec::coefficient(const IntVector& n) const {
  const auto it = index_.find(n);
  return it == index_.end() ? Complex{} : coeffs_[it->second].value;
}

double PotentialSpec::constant_mode() const {
  return coefficient(IntVector::Zero(dim())).real() / std::sqrt(cell_volume());
}

PotentialSpec PotentialSpec::shifted(double c) const {
  std::vector<FourierCoefficient> coeffs(coeffs_.begin(), coeffs_.end());
  coeffs.push_back({IntVector::Zero(dim()), Complex{c * std::sqrt(cell_volume()), 0.0}});
  return PotentialSpec(dual_, std::move(coeffs));
}

bool PotentialSpec::is_zero() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(),
                     [](const auto& c) { return c.value == Complex{}; });
}

double evaluate(const PotentialSpec& potential, const Vector& x) {
  if (x.size() != potential.dim()) {
    throw ValidationError("evaluate: point dimension does not match lattice");
  }
  Complex sum{};
  double magnitude = 0.0;
  for (const auto& c : potential.coefficients()) {
    const double phase = potential.dual().to_cartesian(c.n).dot(x);
    sum += c.value * Complex{std::cos(phase), std::sin(phase)};
    magnitude += std::abs(c.value);
  }
  const double scale = 1.0 / std::sqrt(potential.cell_volume());
  if (std::abs(sum.imag()) > 1e-10 * (1.0 + magnitude)) {
    throw SymmetryError(fmt::format("potential has imaginary residue {:.3e}", sum.imag() * scale));
  }
  return sum.real() * scale;
}

double sup_norm_upper(const PotentialSpec& potential) {
  double total = 0.0;
  for (const auto& c : potential.coefficients()) total += std::abs(c.value);
  return total / std::sqrt(potential.cell_volume());
}

SupNormBracket sup_norm(const PotentialSpec& potential, int grid_per_dim) {
  if (grid_per_dim < 8) {
    throw ValidationError(fmt::format("sup_norm grid must have at least 8 points per "
                                      "dimension, got {}",
                                      grid_per_dim));
  }
  const int d = potential.dim();
  const Matrix& periods = potential.dual().primal().basis();
  SupNormBracket out;
  out.upper = sup_norm_upper(potential);

  IntVector idx = IntVector::Zero(d);
  while (true) {
    const Vector x = periods.transpose() * (idx.cast<double>() / grid_per_dim);
    out.lower = std::max(out.lower, std::abs(evaluate(potential, x)));
    int i = 0;
    while (i < d) {
      if (++idx[i] < grid_per_dim) break;
      idx[i] = 0;
      ++i;
    }
    if (i == d) break;
  }
  out.lower = std::min(out.lower, out.upper);
  return out;
}

double sobolev_seminorm(const PotentialSpec& potential, double m) {
  if (m < 0.0) throw ValidationError("sobolev_seminorm: order must be non-negative");
  double total = 0.0;
  for (const auto& c : potential.coefficients()) {
    const double n = potential.dual().to_cartesian(c.n).norm();
    total += std::pow(n, 2.0 * m) * std::norm(c.value);
  }
  return std::sqrt(total);
}

}  // namespace blochdos
