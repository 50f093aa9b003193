#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "hslab/bubbles.hpp"
#include "hslab/error.hpp"

using namespace hslab;

namespace {

// Closed form through the Beta function: ∫U^{2*}/|Y|^s = ω B(a,a)/(2−s), a = (n−s)/(2−s).
double mu_s_oracle(int n, double s) {
  const double t = 2.0 - s, a = (n - s) / t;
  const double omega = 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
  const double I = omega * std::beta(a, a) / t;
  return (n - 2) * (n - s) * std::pow(I, t / (n - s));
}

const std::vector<int> kDims{3, 4, 5, 6, 7};
const std::vector<double> kS{0.0, 0.5, 1.0, 1.5};

}  // namespace

TEST_CASE("critical exponent and c_{n,s}") {
  CHECK(critical_exponent({3, 1.0}) == 4.0);
  CHECK(critical_exponent({4, 0.0}) == 4.0);
  CHECK(critical_exponent({6, 1.0}) == 2.5);
  for (double s : kS) CHECK(cns({4, s}) == 1.0 / 6.0);
  CHECK(cns({3, 0.0}) == 0.125);
  CHECK(cns({5, 1.0}) == 5.0 / 28.0);
  CHECK(cns_rational(4, 3, 2) == Rational{1, 6});
  CHECK(cns_rational(5, 1, 1) == Rational{5, 28});
  CHECK(cns_rational(3, 0, 1) == Rational{1, 8});
  CHECK(sphere_area(4) == doctest::Approx(2 * std::numbers::pi * std::numbers::pi).epsilon(1e-15));
  CHECK_THROWS_AS(ProblemParams(2, 0.0), InvalidArgument);
  CHECK_THROWS_AS(ProblemParams(4, 2.0), InvalidArgument);
}

TEST_CASE("best constant matches the Beta-function closed form") {
  for (int n : kDims)
    for (double s : kS) {
      CAPTURE(n);
      CAPTURE(s);
      const double mu = best_constant_quadrature({n, s});
      CHECK(std::abs(mu / mu_s_oracle(n, s) - 1.0) < 1e-11);
    }
  // Frozen from a 30-digit evaluation of the same closed form.
  CHECK(best_constant_quadrature({4, 1.0}) == doctest::Approx(5.218600831868915).epsilon(1e-12));
  CHECK(best_constant_quadrature({5, 0.5}) == doctest::Approx(11.28978721105324).epsilon(1e-12));
  CHECK(best_constant_quadrature({3, 1.0}) == doctest::Approx(2.8944050182330706).epsilon(1e-12));
}

TEST_CASE("Rayleigh quotient is scale invariant") {
  for (int n : {3, 4, 5})
    for (double s : kS) {
      const ProblemParams p{n, s};
      const double q1 = rayleigh_quotient(p, 1.0);
      CHECK(std::abs(rayleigh_quotient(p, 0.1) - q1) <= 1e-10 * q1);
      CHECK(std::abs(rayleigh_quotient(p, 10.0) - q1) <= 1e-10 * q1);
      CHECK(std::abs(rayleigh_quotient(p, 0.5) - rayleigh_quotient(p, 2.0)) <= 1e-10 * q1);
    }
}

TEST_CASE("normalization, defK closure and the gamma identity") {
  for (int n : kDims)
    for (double s : kS) {
      CAPTURE(n);
      CAPTURE(s);
      const ProblemParams p{n, s};
      const auto b = Bubble::canonical(p);
      CHECK(std::abs(normalization_check(b) - 1.0) < 1e-8);
      CHECK(std::abs(defk_closure(p)) < 1e-8);
      const auto g = gamma_integral_identity(p);
      CHECK(std::abs(g.lhs - g.rhs) <= 1e-8 * std::abs(g.rhs));
      const double dn_closed = (n - 2) * b.omega() * std::pow(b.K(), n - 2);
      CHECK(std::abs(b.d_n() - dn_closed) <= 1e-8 * dn_closed);
    }
}

TEST_CASE("weighted gradient ratio") {
  for (int n : {5, 6, 7})
    for (double s : kS) {
      const auto r = rayleigh_ratio_identity({n, s});
      CHECK(std::abs(r.lhs - r.rhs) <= 1e-6 * r.rhs);
    }
  CHECK(rayleigh_ratio_identity({5, 1.0}).rhs == doctest::Approx(45.0 / 7.0).epsilon(1e-15));
  CHECK(rayleigh_ratio_identity({6, 0.0}).rhs == doctest::Approx(9.6).epsilon(1e-15));
  CHECK_THROWS_AS(rayleigh_ratio_identity({4, 1.0}), IntegrabilityError);
  // ∫ũ² closed form ωK^n B(n/t,(n−4)/t)/t, t = 2−s; frozen at (5,1).
  CHECK(bubble_l2_squared({5, 1.0}) == doctest::Approx(42.522904477805705).epsilon(1e-10));
  CHECK(bubble_l2_squared({5, 0.0}) == doctest::Approx(16.0).epsilon(1e-10));
}

TEST_CASE("bubble evaluation and family") {
  const ProblemParams p{4, 1.0};
  const auto b = Bubble::canonical(p);
  const std::vector<double> zero(4, 0.0);
  CHECK(b(zero) == 1.0);
  std::vector<double> atc0{b.c0(), 0, 0, 0};
  CHECK(b(atc0) == doctest::Approx(std::pow(2.0, -2.0)).epsilon(1e-14));
  const double far = 1e6;
  CHECK(std::pow(far, 2) * b.profile(far) == doctest::Approx(std::pow(b.K(), 2)).epsilon(1e-5));

  // Appendix reparametrization: c0 = K recovers the canonical bubble.
  const auto same = Bubble::normalized(p, b.K());
  CHECK(same.amplitude() == doctest::Approx(1.0).epsilon(1e-15));
  const auto other = Bubble::normalized(p, 0.3, {0.1, -0.2, 0.0, 0.5});
  CHECK(other.profile(0.0) == doctest::Approx(std::pow(b.K() / 0.3, 1.0)).epsilon(1e-14));
  CHECK(normalization_check(other) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(normalization_check(b.rescaled(1e-3)) == doctest::Approx(1.0).epsilon(1e-9));
  std::vector<double> x{0.1, -0.2, 0.0, 0.5};
  CHECK(other(x) == other.profile(0.0));

  double prev = b.profile(0.0);
  for (double r = 1e-4; r < 1e4; r *= 1.7) {
    const double v = b.profile(r);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("bubble solves the Euclidean equation") {
  for (int n : {3, 4, 5, 6})
    for (double s : kS) {
      const auto b = Bubble::canonical({n, s});
      for (double r : {1e-3, 1.0, 1e3}) CHECK(pde_residual(b, r) <= 1e-8);
      const auto o = Bubble::normalized({n, s}, 0.2);
      for (double r : {1e-3, 1.0, 1e3}) CHECK(pde_residual(o, r) <= 1e-8);
    }
}
