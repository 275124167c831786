#include <doctest.h>

#include <cmath>
#include <numbers>

#include "blochdos/decay.hpp"
#include "blochdos/errors.hpp"

using namespace blochdos;

namespace {

constexpr double kPi = std::numbers::pi;

DualLattice z2() { return dual_lattice(Lattice(2.0 * kPi * Matrix::Identity(2, 2))); }

IntVector ivec(int a, int b) {
  IntVector v(2);
  v << a, b;
  return v;
}

Vector vec(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

PotentialSpec mathieu2() { return PotentialSpec::cosine_sum(z2(), {{ivec(1, 0), 2.0}, {ivec(0, 1), 2.0}}); }

}  // namespace

TEST_CASE("constant chain examples") {
  const PotentialSpec v = mathieu2();
  const DecayConstants half = decay_constants(v, 2, 0.5, std::sqrt(0.5), 5.0);
  CHECK(half.m == 2);
  CHECK(half.kappa == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(half.zeta0 == doctest::Approx(14400.0).epsilon(1e-12));

  const DecayConstants nine = decay_constants(v, 2, 0.9, std::sqrt(0.5), 5.0);
  CHECK(nine.m == 2);
  CHECK(nine.kappa == doctest::Approx(0.18).epsilon(1e-15));
  CHECK(std::abs(nine.zeta0 - 1762.0) < 0.1);
  CHECK(nine.zeta0 == doctest::Approx(std::pow(1.36, 2.0) * std::pow(0.18, -4.0)).epsilon(1e-14));

  const PotentialSpec cos1 = PotentialSpec::cosine_sum(z2(), {{ivec(1, 0), 2.0}});
  const auto chain = decay_chain(cos1, 2, 5.0, 1);
  REQUIRE(chain.size() == 1);
  CHECK(chain[0] == doctest::Approx(12.0 * kPi * std::sqrt(2.0)).epsilon(1e-14));
  CHECK(chain[0] == doctest::Approx(53.31).epsilon(1e-4));
}

TEST_CASE("invariants of the constants") {
  const PotentialSpec v = mathieu2();
  for (int d : {2, 3, 4, 5, 8}) {
    for (double eta : {0.1, 0.5, 0.9}) {
      const DecayConstants c = decay_constants(v, d, eta, 0.8, 6.0);
      CHECK(c.m == (d + 1) / 3 + 1);
      CHECK(c.kappa == eta / (2 * c.m + 1));
      const double expected = std::max(36.0 * 0.64 / (c.kappa * c.kappa),
                                       std::pow(1.0 + c.m * c.kappa, 2.0 / (d - 1)) *
                                           std::pow(c.kappa, -2.0 * d / (d - 1)));
      CHECK(c.zeta0 == doctest::Approx(expected).epsilon(1e-14));
      REQUIRE(static_cast<int>(c.chain.size()) == c.m);
      CHECK(c.chain[0] == doctest::Approx(6.0 * sobolev_seminorm(v, 0.0)).epsilon(1e-15));
      for (std::size_t j = 1; j < c.chain.size(); ++j) {
        const int m = static_cast<int>(j) + 1;
        const double recursion = 6.0 * (std::pow(2.0, 1.5 * m - 1.0) * std::sqrt(6.0) * sobolev_seminorm(v, 0.0) * c.chain[j - 1] +
                                        sobolev_seminorm(v, 1.5 * (m - 1) * d));
        CHECK(c.chain[j] == doctest::Approx(recursion).epsilon(1e-14));
        CHECK(c.chain[j] > c.chain[j - 1]);
      }
    }
  }
}

TEST_CASE("lattice-derived constants use Q and W of the dual lattice") {
  const DecayConstants c = decay_constants(mathieu2(), 0.9);
  CHECK(c.Q == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
  CHECK(c.W == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(c.d == 2);
}

TEST_CASE("eta outside (0, 1) is rejected") {
  const PotentialSpec v = mathieu2();
  for (double eta : {0.0, 1.0, -0.2, 1.5}) {
    CHECK_THROWS_AS(decay_constants(v, 2, eta, 0.7, 5.0), ValidationError);
  }
  CHECK_THROWS_AS(verify_gradient(v, vec(0.1, 0.2), 1800.0, 0.0, 60.0), ValidationError);
}

TEST_CASE("decay of the free eigenfunction") {
  const DecayReport r = verify_decay(PotentialSpec::zero(z2()), vec(0.0, 0.0), 1800.0, 0.9, 75.0);
  CHECK(r.zeta == doctest::Approx(1800.0).epsilon(1e-12));
  CHECK(r.checked > 0);
  CHECK(r.violations.empty());
  CHECK(r.margin_min >= 1.0);
}

TEST_CASE("decay of a Mathieu eigenfunction above zeta0") {
  const PotentialSpec v = mathieu2();
  const DecayReport r = verify_decay(v, vec(0.0, 0.0), 1770.0, 0.9, 70.0);
  CHECK(r.zeta >= r.constants.zeta0);
  CHECK(r.threshold_radius == doctest::Approx(1.36 * std::sqrt(r.zeta)).epsilon(1e-14));
  CHECK(r.shell_outer == doctest::Approx(63.0).epsilon(1e-14));
  CHECK(r.checked > 0);
  CHECK(r.violations.empty());
  CHECK(r.margin_min >= 10.0);
  CHECK(r.residual <= 1e-8 * r.zeta);

  const DecayReport again = verify_decay(v, vec(0.0, 0.0), 1770.0, 0.9, 70.0);
  CHECK(again.zeta == r.zeta);
  CHECK(again.checked == r.checked);
  CHECK(again.margin_min == r.margin_min);
}

TEST_CASE("decay preconditions") {
  const PotentialSpec v = mathieu2();
  try {
    verify_decay(v, vec(0.0, 0.0), 1000.0, 0.9, 60.0);
    FAIL("expected a precondition error");
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("zeta0") != std::string::npos);
  }
  CHECK_THROWS_AS(verify_decay(v, vec(0.0, 0.0), 1800.0, 0.9, 60.0), PreconditionError);
}

TEST_CASE("free gradient saturates 1 / (1 + eta) of the bound") {
  const GradientReport r = verify_gradient(PotentialSpec::zero(z2()), vec(0.1234, 0.3071), 1800.0, 0.9, 50.0);
  CHECK(r.bound_ok);
  CHECK(r.hf_velocity.norm() == doctest::Approx(2.0 * std::sqrt(r.zeta)).epsilon(1e-10));
  CHECK(r.hf_velocity.norm() / r.bound == doctest::Approx(1.0 / 1.9).epsilon(1e-10));
  CHECK(r.relative_difference <= 1e-6);
}

TEST_CASE("Mathieu gradient matches finite differences") {
  const GradientReport r = verify_gradient(mathieu2(), vec(0.21, -0.34), 1805.0, 0.9, 50.0);
  CHECK(r.zeta >= r.constants.zeta0);
  CHECK(r.bound_ok);
  CHECK((r.hf_velocity - r.fd_velocity).norm() <= 1e-4 * (1.0 + r.hf_velocity.norm()));
  CHECK(r.step == 1e-4);
}

TEST_CASE("gradient on a degenerate band is an error") {
  CHECK_THROWS_AS(verify_gradient(PotentialSpec::zero(z2()), vec(0.0, 0.0), 1800.0, 0.9, 50.0), DegeneracyError);
}
