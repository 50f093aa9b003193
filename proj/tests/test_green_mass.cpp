#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "hslab/error.hpp"
#include "hslab/green_mass.hpp"
#include "hslab/params.hpp"

using namespace hslab;

namespace {

constexpr double kPi = std::numbers::pi;

// Unit S³, constant h < 1: with k = √(1−h), G = sin(k(π−θ))/(4π sin(kπ) sin θ)
// (w = G sin θ solves w″ = −k²w), and β(0) = −k cot(kπ)/(4π).
double s3_green(double h, double th) {
  const double k = std::sqrt(1 - h);
  return std::sin(k * (kPi - th)) / (4 * kPi * std::sin(k * kPi) * std::sin(th));
}
double s3_mass(double h) {
  if (h == 1.0) return -1.0 / (4 * kPi * kPi);
  const double k = std::sqrt(1 - h);
  return -k / std::tan(k * kPi) / (4 * kPi);
}

const auto kS3 = ManifoldModel::sphere(3, 1.0, 0.5);

}  // namespace

TEST_CASE("S^3 Green's function against the closed form") {
  for (double h : {0.3, 0.5, 0.75, 0.9}) {
    CAPTURE(h);
    const auto G = solve_green(kS3, RadialPotential(h));
    for (double th : {1e-7, 1e-4, 0.01, 0.3, 1.0, 1.7, 2.5, 3.1, 3.14159}) CHECK(G(th) == doctest::Approx(s3_green(h, th)).epsilon(1e-10));
    CHECK(G.max_ode_residual() <= 1e-8);
    CHECK(G.singular_normalization() == doctest::Approx(1 / (4 * kPi)).epsilon(1e-5));
    for (double v : G.values()) CHECK(v > 0);
  }
  // h = 3/4 is the conformal Laplacian: G = 1/(8π sin(θ/2)).
  const auto G = solve_green(kS3, RadialPotential(0.75));
  for (double th : {1e-3, 0.5, 2.0, 3.0}) CHECK(G(th) == doctest::Approx(1 / (8 * kPi * std::sin(th / 2))).epsilon(1e-6));
}

TEST_CASE("singular normalization in higher dimensions") {
  for (int n : {4, 5, 6}) {
    CAPTURE(n);
    const auto S = ManifoldModel::sphere(n, 1.0, 0.5);
    const double hc = n * (n - 2) / 4.0;
    const auto G = solve_green(S, RadialPotential(hc));
    CHECK(G.singular_normalization() == doctest::Approx(1.0 / ((n - 2) * sphere_area(n))).epsilon(1e-6));
    for (double th : {1e-4, 0.2, 1.5, 3.0}) CHECK(G(th) == doctest::Approx(conformal_sphere_green(n, 1.0, th)).epsilon(1e-9));
    CHECK(G.max_ode_residual() <= 1e-8);
  }
}

TEST_CASE("Gegenbauer eigen-series cross-check") {
  for (int n : {3, 4, 5}) {
    for (double h : {0.4, 1.3}) {
      CAPTURE(n);
      CAPTURE(h);
      const auto G = solve_green(ManifoldModel::sphere(n, 1.0, 0.5), RadialPotential(h));
      for (double th : {0.7, 1.6, 2.8}) CHECK(eigen_series_green(n, 1.0, h, th, 20000) == doctest::Approx(G(th)).epsilon(1e-6));
    }
  }
}

TEST_CASE("delta normalization for three test functions") {
  for (double h : {0.5, 2.0}) {
    const auto G = solve_green(kS3, RadialPotential(h));
    CHECK(std::abs(G.delta_defect([](double t) { return std::cos(t); }, [](double t) { return -std::sin(t); })) < 1e-9);
    CHECK(std::abs(G.delta_defect([](double t) { return std::exp(std::cos(t)); },
                                  [](double t) { return -std::sin(t) * std::exp(std::cos(t)); })) < 1e-9);
    CHECK(std::abs(G.delta_defect([](double t) { return 1 + std::cos(2 * t); }, [](double t) { return -2 * std::sin(2 * t); })) < 1e-9);
  }
}

TEST_CASE("variable potential and radius") {
  // a non-constant h on a radius-2 sphere: defining properties only.
  const auto S = ManifoldModel::sphere(3, 2.0, 0.5);
  const RadialPotential h([](double t) { return 0.3 + 0.1 * std::cos(t / 2); });
  const auto G = solve_green(S, h);
  CHECK(G.max_ode_residual() <= 1e-8);
  CHECK(G.singular_normalization() == doctest::Approx(1 / (4 * kPi)).epsilon(1e-5));
  CHECK(std::abs(G.delta_defect([](double t) { return std::cos(t / 2); }, [](double t) { return -0.5 * std::sin(t / 2); })) < 1e-9);
}

TEST_CASE("non-coercive potentials are rejected") {
  CHECK_THROWS_AS(solve_green(kS3, RadialPotential(0.0)), NonCoerciveError);
  CHECK_THROWS_AS(solve_green(kS3, RadialPotential(-0.2)), NonCoerciveError);
  CHECK_THROWS_AS(solve_green(ManifoldModel::torus(3, 0.5), RadialPotential(1.0)), InvalidArgument);
}

TEST_CASE("mass on S^3") {
  for (double h : {0.5, 0.625, 0.75, 0.875, 1.0}) {
    CAPTURE(h);
    const auto m = mass(kS3, h);
    CHECK(m.mass == doctest::Approx(s3_mass(h)).epsilon(1e-6));
    CHECK(std::abs(m.mass - s3_mass(h)) <= m.error);
    CHECK(m.windows_agree);
    CHECK(m.theta.size() == m.beta.size());
  }
  CHECK(std::abs(mass(kS3, 0.75).mass) < 1e-3);
  // Frozen closed-form values.
  CHECK(mass(kS3, 0.5).mass == doctest::Approx(0.042833835952018521).epsilon(1e-6));
  CHECK(mass(kS3, 1.0).mass == doctest::Approx(-0.025330295910584443).epsilon(1e-6));
  CHECK_THROWS_AS(mass(ManifoldModel::sphere(4, 1.0, 0.5), 2.0), InvalidArgument);
}

TEST_CASE("mass monotonicity and its derivative") {
  const auto sw = mass_sweep(kS3, {0.5, 0.625, 0.75, 0.875, 1.0}, 2);
  CHECK(sw.decreasing);
  // dm/dh = −∫G² dv < 0, checked by a centered difference.
  const double h = 0.6, e = 1e-4;
  const double dm = (mass(kS3, h + e).mass - mass(kS3, h - e).mass) / (2 * e);
  const double k = std::sqrt(1 - h);
  // d/dh of −k cot(kπ)/(4π) with dk/dh = −1/(2k).
  const double exact = (std::cos(k * kPi) / std::sin(k * kPi) - k * kPi / std::pow(std::sin(k * kPi), 2)) / (8 * kPi * k);
  CHECK(dm < 0);
  CHECK(dm == doctest::Approx(exact).epsilon(1e-3));
}

TEST_CASE("mass blows up like 1/(h Vol) as h -> 0") {
  for (double h : {1e-2, 1e-3}) {
    const double m = mass(kS3, h).mass;
    CHECK(m * h * 2 * kPi * kPi == doctest::Approx(1.0).epsilon(10 * h));
  }
}

TEST_CASE("mass-zero root") {
  const auto r = mass_zero_root(kS3);
  CHECK(r.h_star == doctest::Approx(0.75).epsilon(1e-6));
  CHECK(std::abs(r.mass_at_root) <= 1e-4);
  // g → R²g sends h* to h*/R².
  const auto r2 = mass_zero_root(ManifoldModel::sphere(3, 2.0, 0.5));
  CHECK(r2.h_star == doctest::Approx(0.75 / 4).epsilon(1e-6));
  CHECK_THROWS_AS(mass_zero_root(kS3, 0.1, 0.5), InvalidArgument);
}
