#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include "blochdos/errors.hpp"
#include "blochdos/lattice.hpp"

using namespace blochdos;

namespace {

constexpr double kPi = std::numbers::pi;

Matrix square(double scale) { return scale * Matrix::Identity(2, 2); }

DualLattice integer_dual(int d) {
  return dual_lattice(Lattice(2.0 * kPi * Matrix::Identity(d, d)));
}

Matrix hexagonal() {
  Matrix b(2, 2);
  b << 1.0, 0.0, 0.5, std::sqrt(3.0) / 2.0;
  return b;
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

IntVector ivec(std::initializer_list<int> xs) {
  IntVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (int x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("lattice construction rejects degenerate bases") {
  CHECK_THROWS_AS(Lattice(Matrix::Zero(2, 2)), ValidationError);
  CHECK_THROWS_AS(Lattice(Matrix::Identity(1, 1)), ValidationError);
  CHECK_THROWS_AS(Lattice(Matrix::Identity(2, 3)), ValidationError);
  Matrix parallel(2, 2);
  parallel << 1.0, 2.0, 2.0, 4.0;
  CHECK_THROWS_AS(Lattice{parallel}, ValidationError);
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(Lattice{bad}, ValidationError);
}

TEST_CASE("dual of 2pi Z^2 is Z^2 and vice versa") {
  const DualLattice a = dual_lattice(Lattice(square(2.0 * kPi)));
  CHECK((a.basis() - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
  const DualLattice b = dual_lattice(Lattice(Matrix::Identity(2, 2)));
  CHECK((b.basis() - square(2.0 * kPi)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(a.primal().cell_volume() == doctest::Approx(4.0 * kPi * kPi).epsilon(1e-15));
}

TEST_CASE("hexagonal dual matches the frozen oracle and pairs to 2 pi delta") {
  const Lattice lattice(hexagonal());
  const DualLattice dual = dual_lattice(lattice);
  Matrix expected(2, 2);
  expected << 6.283185307179586, -3.627598728468436, 0.0, 7.255197456936872;
  CHECK((dual.basis() - expected).cwiseAbs().maxCoeff() < 1e-12);
  const Matrix pairing = dual.basis() * lattice.basis().transpose();
  CHECK((pairing - 2.0 * kPi * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("double dual returns the original basis") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + trial % 2;
    Matrix b = Matrix::Identity(d, d) * 1.5;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) b(i, j) += 0.4 * u(rng);
    const DualLattice once = dual_lattice(Lattice(b));
    const DualLattice twice = dual_lattice(once.geometry());
    CHECK((twice.basis() - b).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("decompose examples on Z^2") {
  const DualLattice z2 = integer_dual(2);
  const Decomposition a = decompose(vec({0.6, 0.0}), z2);
  CHECK(a.integer_part == ivec({1, 0}));
  CHECK((a.fractional_part - vec({-0.4, 0.0})).norm() < 1e-15);

  const Decomposition b = decompose(vec({3.0, -2.0}), z2);
  CHECK(b.integer_part == ivec({3, -2}));
  CHECK(b.fractional_part.norm() == 0.0);

  const Decomposition tie = decompose(vec({0.5, 0.0}), z2);
  CHECK(tie.integer_part == ivec({0, 0}));
  CHECK((tie.fractional_part - vec({0.5, 0.0})).norm() == 0.0);

  const Decomposition corner = decompose(vec({-0.5, 0.5}), z2);
  CHECK(corner.integer_part == ivec({-1, 0}));
}

TEST_CASE("decompose reassembles xi and lands in the Brillouin zone") {
  for (const Matrix& basis : {square(2.0 * kPi), hexagonal(), Matrix(Matrix::Identity(3, 3))}) {
    const DualLattice dual = dual_lattice(Lattice(basis));
    const double q = brillouin_radius(dual).value;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-40.0, 40.0);
    for (int i = 0; i < 10000; ++i) {
      Vector xi(dual.dim());
      for (Eigen::Index j = 0; j < xi.size(); ++j) xi[j] = u(rng);
      const Decomposition dec = decompose(xi, dual);
      REQUIRE((dec.lattice_point + dec.fractional_part - xi).norm() <= 1e-12 * (1.0 + xi.norm()));
      REQUIRE((dual.to_cartesian(dec.integer_part) - dec.lattice_point).norm() < 1e-12 * (1.0 + xi.norm()));
      REQUIRE(dec.fractional_part.norm() <= q * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("Brillouin radius") {
  const BrillouinRadius z2 = brillouin_radius(integer_dual(2));
  CHECK(z2.exact);
  CHECK(z2.value == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-14));
  CHECK(brillouin_radius(integer_dual(3)).value == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-14));
  const BrillouinRadius hex = brillouin_radius(dual_lattice(Lattice(hexagonal())));
  CHECK(std::abs(hex.value - 4.188790204786391) < 1e-6);
  const BrillouinRadius z4 = brillouin_radius(integer_dual(4));
  CHECK_FALSE(z4.exact);
  CHECK(z4.value >= 1.0 - 1e-12);
}

TEST_CASE("points_in_ball examples and ordering") {
  const DualLattice z2 = integer_dual(2);
  const auto unit = points_in_ball(z2, 1.0, true);
  REQUIRE(unit.size() == 4);
  std::set<std::pair<int, int>> coords;
  for (const auto& p : unit) coords.insert({p.coords[0], p.coords[1]});
  CHECK(coords == std::set<std::pair<int, int>>{{-1, 0}, {1, 0}, {0, -1}, {0, 1}});
  CHECK(points_in_ball(z2, 1.5, false).size() == 9);
  const auto r2 = points_in_ball(z2, 2.0, false);
  CHECK(r2.size() == 13);
  CHECK(r2.front().norm == 0.0);
  for (std::size_t i = 1; i < r2.size(); ++i) CHECK(r2[i - 1].norm <= r2[i].norm);
}

TEST_CASE("points_in_ball is monotone in the radius") {
  const DualLattice hex = dual_lattice(Lattice(hexagonal()));
  auto key = [](const LatticePoint& p) { return std::vector<int>(p.coords.data(), p.coords.data() + p.coords.size()); };
  std::set<std::vector<int>> previous;
  for (double r = 0.5; r < 40.0; r *= 1.7) {
    std::set<std::vector<int>> current;
    for (const auto& p : points_in_ball(hex, r, false)) current.insert(key(p));
    CHECK(std::includes(current.begin(), current.end(), previous.begin(), previous.end()));
    previous = std::move(current);
  }
}

TEST_CASE("packing constant W") {
  CHECK(packing_constant_W(integer_dual(2)) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(packing_constant_W(integer_dual(3)) == doctest::Approx(7.0).epsilon(1e-14));
  // 2Z^2: five points at radius 2 give 5 / 2^2.
  const DualLattice two = dual_lattice(Lattice(square(kPi)));
  CHECK(packing_constant_W(two) == doctest::Approx(1.25).epsilon(1e-14));
}

TEST_CASE("W dominates the asymptotic point density") {
  for (const Matrix& basis : {square(2.0 * kPi), hexagonal(), square(0.7), Matrix(Matrix::Identity(3, 3))}) {
    const DualLattice dual = dual_lattice(Lattice(basis));
    CHECK(packing_constant_W(dual) >= unit_ball_volume(dual.dim()) / dual.cell_volume());
  }
}

TEST_CASE("unit ball volumes") {
  CHECK(unit_ball_volume(2) == doctest::Approx(kPi));
  CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * kPi / 3.0));
}
