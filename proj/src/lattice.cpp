#include "blochdos/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/LU>

#include "blochdos/errors.hpp"

namespace blochdos {

namespace {

// Visits every integer vector in the box [lower, upper] (inclusive, per coordinate).
template <class Visit>
void for_each_in_box(const IntVector& lower, const IntVector& upper, Visit&& visit) {
  const auto d = lower.size();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (lower[i] > upper[i]) return;
  }
  IntVector c = lower;
  while (true) {
    visit(c);
    Eigen::Index i = 0;
    while (i < d) {
      if (c[i] < upper[i]) {
        ++c[i];
        break;
      }
      c[i] = lower[i];
      ++i;
    }
    if (i == d) return;
  }
}

bool sort_by_norm_then_lex(const LatticePoint& a, const LatticePoint& b) {
  if (a.norm != b.norm) return a.norm < b.norm;
  return lexicographic_less(a.coords, b.coords);
}

// Nonzero dual points that can define facets of the Voronoi cell: |m| <= 2 * covering radius.
std::vector<Vector> facet_candidates(const Lattice& lattice) {
  const double reach = 2.0 * lattice.covering_radius_bound() * (1.0 + 1e-9);
  std::vector<Vector> out;
  for (const auto& c : lattice.coordinates_in_ball(Vector::Zero(lattice.dim()), reach)) {
    if (c.isZero()) continue;
    out.push_back(lattice.to_cartesian(c));
  }
  return out;
}

// Voronoi vertices are intersections of d facet hyperplanes <k, m> = |m|^2/2 that satisfy
// every other facet inequality.
double voronoi_circumradius(const Lattice& lattice) {
  const auto planes = facet_candidates(lattice);
  const int d = lattice.dim();
  const std::size_t count = planes.size();
  double scale = 0.0;
  for (const auto& m : planes) scale = std::max(scale, m.squaredNorm());
  const double tol = 1e-10 * scale;

  double best = 0.0;
  std::vector<std::size_t> pick(static_cast<std::size_t>(d));
  auto try_vertex = [&]() {
    Matrix a(d, d);
    Vector rhs(d);
    for (int r = 0; r < d; ++r) {
      a.row(r) = planes[pick[static_cast<std::size_t>(r)]].transpose();
      rhs[r] = 0.5 * planes[pick[static_cast<std::size_t>(r)]].squaredNorm();
    }
    Eigen::FullPivLU<Matrix> lu(a);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) return;
    const Vector k = lu.solve(rhs);
    for (const auto& m : planes) {
      if (k.dot(m) > 0.5 * m.squaredNorm() + tol) return;
    }
    best = std::max(best, k.norm());
  };

  if (d == 2) {
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = i + 1; j < count; ++j) {
        pick = {i, j};
        try_vertex();
      }
  } else {
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = i + 1; j < count; ++j)
        for (std::size_t l = j + 1; l < count; ++l) {
          pick = {i, j, l};
          try_vertex();
        }
  }
  return best;
}

}  // namespace

Lattice::Lattice(Matrix basis) : basis_(std::move(basis)) {
  if (basis_.rows() != basis_.cols()) {
    throw ValidationError("lattice basis must be square");
  }
  if (basis_.rows() < 2) {
    throw ValidationError("lattice dimension must be at least 2");
  }
  if (!basis_.allFinite()) {
    throw ValidationError("lattice basis has non-finite entries");
  }
  Eigen::FullPivLU<Matrix> lu(basis_);
  volume_ = std::abs(lu.determinant());
  // Hadamard: volume <= product of generator lengths.
  const double hadamard = basis_.rowwise().norm().prod();
  if (!lu.isInvertible() || volume_ <= 1e-12 * hadamard) {
    throw ValidationError("lattice basis is singular");
  }
  inverse_ = lu.inverse();
}

Vector Lattice::to_cartesian(const IntVector& coords) const {
  return basis_.transpose() * coords.cast<double>();
}

Vector Lattice::to_coordinates(const Vector& x) const { return inverse_.transpose() * x; }

double Lattice::covering_radius_bound() const {
  return 0.5 * std::sqrt(basis_.rowwise().squaredNorm().sum());
}

std::vector<IntVector> Lattice::coordinates_in_ball(const Vector& center, double radius) const {
  std::vector<IntVector> out;
  if (radius < 0.0) return out;
  const int d = dim();
  const Vector c0 = to_coordinates(center);
  IntVector lower(d), upper(d);
  for (int i = 0; i < d; ++i) {
    // |c_i - c0_i| = |(x - center) . inverse.col(i)| <= radius * |inverse.col(i)|
    const double reach = radius * inverse_.col(i).norm();
    lower[i] = static_cast<int>(std::ceil(c0[i] - reach - 1e-9));
    upper[i] = static_cast<int>(std::floor(c0[i] + reach + 1e-9));
  }
  const double r2 = radius * radius;
  for_each_in_box(lower, upper, [&](const IntVector& c) {
    if ((to_cartesian(c) - center).squaredNorm() <= r2) out.push_back(c);
  });
  return out;
}

DualLattice dual_lattice(const Lattice& lattice) {
  Matrix dual_basis = 2.0 * std::numbers::pi * lattice.basis().inverse().transpose();
  return DualLattice(Lattice(std::move(dual_basis)), lattice);
}

Decomposition decompose(const Vector& xi, const DualLattice& dual) {
  const Lattice& g = dual.geometry();
  if (xi.size() != g.dim()) {
    throw ValidationError("decompose: vector dimension does not match lattice");
  }
  const Vector coords = g.to_coordinates(xi);
  IntVector guess(g.dim());
  for (int i = 0; i < g.dim(); ++i) guess[i] = static_cast<int>(std::lround(coords[i]));
  const double r0 = (xi - g.to_cartesian(guess)).norm();

  const auto candidates = g.coordinates_in_ball(xi, r0 * (1.0 + 1e-9) + 1e-12);
  double best = (xi - g.to_cartesian(guess)).squaredNorm();
  for (const auto& c : candidates) best = std::min(best, (xi - g.to_cartesian(c)).squaredNorm());

  const double tie = 1e-12 * (1.0 + xi.squaredNorm());
  IntVector chosen = guess;
  bool have = false;
  auto consider = [&](const IntVector& c) {
    if ((xi - g.to_cartesian(c)).squaredNorm() > best + tie) return;
    if (!have || lexicographic_less(c, chosen)) {
      chosen = c;
      have = true;
    }
  };
  consider(guess);
  for (const auto& c : candidates) consider(c);

  Decomposition out;
  out.integer_part = chosen;
  out.lattice_point = g.to_cartesian(chosen);
  out.fractional_part = xi - out.lattice_point;
  return out;
}

BrillouinRadius brillouin_radius(const DualLattice& dual) {
  const Lattice& g = dual.geometry();
  if (g.dim() <= 3) return {voronoi_circumradius(g), true};
  return {g.covering_radius_bound(), false};
}

std::vector<LatticePoint> points_in_ball(const DualLattice& dual, double radius,
                                         bool exclude_origin) {
  std::vector<LatticePoint> out;
  for (auto& c : dual.geometry().coordinates_in_ball(Vector::Zero(dual.dim()), radius)) {
    if (exclude_origin && c.isZero()) continue;
    LatticePoint p;
    p.cartesian = dual.to_cartesian(c);
    p.norm = p.cartesian.norm();
    p.coords = std::move(c);
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(), sort_by_norm_then_lex);
  return out;
}

double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

double packing_constant_W(const DualLattice& dual) {
  const int d = dual.dim();
  const double cover = dual.geometry().covering_radius_bound();
  const double cell = dual.cell_volume();
  auto tail_bound = [&](double r) {
    return unit_ball_volume(d) * std::pow((r + cover) / r, d) / cell;
  };

  double radius = 8.0;
  double scanned = 0.0;
  for (int attempt = 0; attempt < 12; ++attempt) {
    std::vector<double> norms;
    for (const auto& c : dual.geometry().coordinates_in_ball(Vector::Zero(d), radius)) {
      norms.push_back(dual.to_cartesian(c).norm());
    }
    std::sort(norms.begin(), norms.end());

    // r -> 1+ limit
    const auto at_one = std::upper_bound(norms.begin(), norms.end(), 1.0) - norms.begin();
    scanned = static_cast<double>(at_one);
    for (std::size_t i = static_cast<std::size_t>(at_one); i < norms.size(); ++i) {
      scanned = std::max(scanned, static_cast<double>(i + 1) / std::pow(norms[i], d));
    }
    if (tail_bound(radius) <= scanned) return scanned;

    const double next = 2.0 * radius;
    if (unit_ball_volume(d) * std::pow(next, d) / cell > 2e7) {
      // Tail not certified within the scan budget: return the certified upper bound.
      return std::max(scanned, tail_bound(radius));
    }
    radius = next;
  }
  return std::max(scanned, tail_bound(radius));
}

}  // namespace blochdos
