#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "hslab/error.hpp"
#include "hslab/geometry.hpp"

using namespace hslab;
using std::numbers::pi;

namespace {

std::vector<double> along(int n, double t, std::vector<double> dir) {
  double nn = 0;
  for (double d : dir) nn += d * d;
  for (auto& d : dir) d *= t / std::sqrt(nn);
  dir.resize(n, 0.0);
  return dir;
}

}  // namespace

TEST_CASE("exact sphere moments") {
  CHECK(sphere_moment2(4, 1, 1) == doctest::Approx(pi * pi / 2).epsilon(1e-15));
  CHECK(sphere_moment2(4, 1, 2) == 0.0);
  CHECK(sphere_moment2(3, 3, 3) == doctest::Approx(4 * pi / 3).epsilon(1e-15));
  CHECK(sphere_moment4(4, 1, 1, 2, 2) == doctest::Approx(pi * pi / 12).epsilon(1e-15));
  CHECK(sphere_moment4(4, 1, 1, 1, 1) == doctest::Approx(pi * pi / 4).epsilon(1e-15));
  CHECK(sphere_moment4(4, 1, 2, 3, 4) == 0.0);
  CHECK_THROWS_AS(sphere_moment2(3, 0, 1), InvalidArgument);
}

TEST_CASE("product rule reproduces the moments") {
  for (int n = 2; n <= 7; ++n) {
    CAPTURE(n);
    const auto rule = SphereRule::for_degree(n, 6);
    double total = 0;
    for (std::size_t i = 0; i < rule.size(); ++i) total += rule.weight(i);
    CHECK(std::abs(total - sphere_moment2(n, 1, 1) * n) < 1e-12);
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) {
        const double m2 = rule.integrate([&](auto x) { return x[i - 1] * x[j - 1]; });
        CHECK(std::abs(m2 - sphere_moment2(n, i, j)) < 1e-12);
        for (int a = 1; a <= n; ++a)
          for (int b = 1; b <= n; ++b) {
            const double m4 = rule.integrate([&](auto x) { return x[i - 1] * x[j - 1] * x[a - 1] * x[b - 1]; });
            CHECK(std::abs(m4 - sphere_moment4(n, i, j, a, b)) < 1e-12);
          }
      }
    // degree 6: ∫σ₁⁶ = 15ω/(n(n+2)(n+4))
    const double m6 = rule.integrate([](auto x) { return std::pow(x[0], 6); });
    CHECK(std::abs(m6 - 15 * sphere_moment2(n, 1, 1) / ((n + 2.0) * (n + 4.0))) < 1e-12);
  }
  const std::vector<int> e1{2, 2, 0, 0}, e2{3, 1, 0, 0}, e3{4, 0, 0, 0};
  CHECK(std::abs(sphere_monomial_quadrature(4, e1) - pi * pi / 12) < 1e-12);
  CHECK(std::abs(sphere_monomial_quadrature(4, e2)) < 1e-14);
  CHECK(std::abs(sphere_monomial_quadrature(4, e3) - pi * pi / 4) < 1e-12);
  // Monte-Carlo path: 1/√N error, deterministic under the seed.
  const double mc = sphere_monomial_monte_carlo(4, e1, 200000, 7);
  CHECK(std::abs(mc - pi * pi / 12) < 0.02);
  CHECK(mc == sphere_monomial_monte_carlo(4, e1, 200000, 7));
}

TEST_CASE("model metrics are in normal coordinates") {
  for (const auto& m : {ManifoldModel::sphere(4, 1.0, 1.0), ManifoldModel::sphere(3, 2.0, 1.5),
                        ManifoldModel::torus(4, 1.0), ManifoldModel::perturbed_sphere(4, 1.0, 0.8, 0.2)}) {
    const std::vector<double> zero(m.dim(), 0.0);
    CHECK((m.metric(zero) - Metric::Identity(m.dim(), m.dim())).norm() == 0.0);
    CHECK(gauge_defect(m) < 1e-10);
    const auto X = along(m.dim(), 0.7 * m.delta(), {1, -2, 0.5});
    const Metric g = m.metric(X);
    CHECK((g - g.transpose()).norm() < 1e-15);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    CHECK(es.eigenvalues().minCoeff() > 0);
  }
  CHECK_THROWS_AS(ManifoldModel::sphere(4, 1.0, 3.2), InvalidArgument);
  CHECK_THROWS_AS(ManifoldModel::perturbed_sphere(4, 1.0, 2.5, 5.0), InvalidArgument);
}

TEST_CASE("Christoffel symbols") {
  const auto flat = ManifoldModel::torus(4, 1.0);
  const auto X = along(4, 0.3, {1, 2, 3, 4});
  CHECK(christoffel(flat, X, 1e-3).max_abs() == 0.0);

  const auto s4 = ManifoldModel::sphere(4, 1.0, 1.0);
  const std::vector<double> zero(4, 0.0);
  CHECK(christoffel(s4, zero, 1e-3).max_abs() < 1e-12);

  const auto Y = along(4, 0.1, {0.3, -0.7, 0.2, 0.6});
  const auto G = christoffel(s4, Y, 1e-3);
  const auto E = sphere_christoffel_exact(4, 1.0, Y);
  double worst = 0, sym = 0;
  for (int k = 0; k < 4; ++k)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        worst = std::max(worst, std::abs(G(k, i, j) - E(k, i, j)));
        sym = std::max(sym, std::abs(G(k, i, j) - G(k, j, i)));
      }
  CHECK(sym == 0.0);
  CHECK(worst < 1e-10);
  CHECK(E.max_abs() > 1e-2);  // non-trivial comparison

  CHECK_THROWS_AS(christoffel(s4, Y, 0.5), InvalidArgument);
}

TEST_CASE("curvature sums") {
  auto near = [](const CurvatureSummary& c, double a, double b, double d) {
    CHECK(std::abs(c.sum_dij_gij - a) < 1e-3);
    CHECK(std::abs(c.sum_dbb_gii - b) < 1e-3);
    CHECK(std::abs(c.sum_dk_gamma - d) < 1e-3);
  };
  near(curvature_identities(ManifoldModel::torus(4, 1.0)), 0, 0, 0);
  const auto s4 = ManifoldModel::sphere(4, 1.0, 1.0);
  CHECK(s4.scal_x0() == 12.0);
  near(curvature_identities(s4), 4, -8, 8);
  near(curvature_identities(ManifoldModel::sphere(3, 1.0, 1.0)), 2, -4, 4);
  // Scal scales like R^{−2}; the perturbation does not touch second derivatives.
  near(curvature_identities(ManifoldModel::sphere(5, 2.0, 1.0)), 5.0 / 3, -10.0 / 3, 10.0 / 3);
  near(curvature_identities(ManifoldModel::perturbed_sphere(4, 1.0, 0.8, 0.3)), 4, -8, 8);
  const auto c = curvature_identities(s4);
  CHECK(std::abs(c.sum_dij_gij + c.sum_dk_gamma - s4.scal_x0()) < 1e-3);
  CHECK(c.err_dk_gamma < 1e-6);
}

TEST_CASE("Cartan expansion residual") {
  const auto flat = ManifoldModel::torus(4, 1.0);
  CHECK(cartan_residual(flat, along(4, 0.5, {1, 1, 0, 0})) == 0.0);
  const auto s4 = ManifoldModel::sphere(4, 1.0, 1.0);
  CHECK(cartan_residual(s4, std::vector<double>(4, 0.0)) == 0.0);

  // The round metric is even in X (parallel curvature), so the first
  // neglected term is quartic and the doubling ratio tends to 16.
  const std::vector<double> dir{0.2, 0.5, -0.4, 0.7};
  const double t = 0.01;
  const double r_s4 = cartan_residual(s4, along(4, 2 * t, dir)) / cartan_residual(s4, along(4, t, dir));
  CHECK(r_s4 == doctest::Approx(16.0).epsilon(0.01));

  // A cubic perturbation produces the generic O(|X|³) remainder.
  const auto pert = ManifoldModel::perturbed_sphere(4, 1.0, 0.8, 0.3);
  const double r_p = cartan_residual(pert, along(4, 2 * t, dir)) / cartan_residual(pert, along(4, t, dir));
  CHECK(r_p == doctest::Approx(8.0).epsilon(0.02));

  // Without a known curvature tensor the quadratic term comes from finite differences.
  const auto user = ManifoldModel::custom(
      4, [&](std::span<const double> X) { return pert.metric(X); }, 12.0, 0.8);
  const double r_u = cartan_residual(user, along(4, 2 * 0.05, dir)) / cartan_residual(user, along(4, 0.05, dir));
  CHECK(r_u == doctest::Approx(8.0).epsilon(0.1));
}
