#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "hslab/bubbles.hpp"
#include "hslab/error.hpp"
#include "hslab/geometry.hpp"
#include "hslab/pohozaev.hpp"
#include "hslab/radial_solver.hpp"

using namespace hslab;

namespace {

// u = Σ c_k exp(−b_k r²) with seeded random coefficients.
struct Gaussians {
  std::vector<double> c, b;
  double u(double r) const {
    double v = 0;
    for (std::size_t k = 0; k < c.size(); ++k) v += c[k] * std::exp(-b[k] * r * r);
    return v;
  }
  double du(double r) const {
    double v = 0;
    for (std::size_t k = 0; k < c.size(); ++k) v -= 2 * b[k] * r * c[k] * std::exp(-b[k] * r * r);
    return v;
  }
  double d2u(double r) const {
    double v = 0;
    for (std::size_t k = 0; k < c.size(); ++k) v += c[k] * (4 * b[k] * b[k] * r * r - 2 * b[k]) * std::exp(-b[k] * r * r);
    return v;
  }
};

Gaussians random_gaussians(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> C(0.5, 2.0), B(0.5, 3.0);
  Gaussians g;
  for (int k = 0; k < 3; ++k) {
    g.c.push_back(C(gen));
    g.b.push_back(B(gen));
  }
  return g;
}

PohozaevInput gaussian_input(const ProblemParams& p, const ManifoldModel& m, const Gaussians& g, double a,
                             double lambda, double delta) {
  PohozaevInput in;
  in.params = p;
  in.metric = m;
  in.u_hat = radial_field(
      p.n, [g](double r) { return g.u(r); }, [g](double r) { return g.du(r); }, [g](double r) { return g.d2u(r); });
  in.a_hat = RadialPotential(a);
  in.lambda = lambda;
  in.delta = delta;
  in.mu = 0.5;
  return in;
}

PohozaevInput unit_bubble(const ProblemParams& p, double delta) {
  auto in = flat_bubble_ladder(p, 0.0, delta, {0.5}).front();
  in.u_hat = bubble_field(Bubble::canonical(p));
  in.mu = 1.0;
  return in;
}

}  // namespace

TEST_CASE("exact flat bubbles make every term vanish") {
  for (auto [n, s] : {std::pair{3, 1.0}, {4, 1.0}, {5, 0.5}}) {
    for (double delta : {0.5, 1.0, 2.0}) {
      CAPTURE(n);
      CAPTURE(delta);
      const auto in = unit_bubble({n, s}, delta);
      const auto r = pohozaev_terms(in);
      CHECK(std::abs(r.B.value) <= 1e-6);
      CHECK(r.C.value == 0.0);
      CHECK(r.D.value == 0.0);
      CHECK(std::abs(pohozaev_volume(in).value) <= 1e-10);
      // The full angular rule agrees with the isotropic shortcut.
      auto full = in;
      full.radial = false;
      CHECK(pohozaev_terms(full).B.value == doctest::Approx(r.B.value).epsilon(1e-12));
    }
  }
}

TEST_CASE("assembly of D from its four pieces") {
  std::mt19937_64 gen(7);
  const auto g = random_gaussians(gen);
  for (const auto& m : {ManifoldModel::sphere(4, 1.0, 1.0), ManifoldModel::perturbed_sphere(4, 1.0, 1.0, 0.1)}) {
    const auto r = pohozaev_terms(gaussian_input({4, 1.0}, m, g, 0.7, 3.0, 0.8));
    CHECK(r.D.value == r.D1.value - r.D2.value + 1.0 * (r.D3.value - r.D4.value));
    CHECK(r.identity_residual == std::abs(r.C.value + r.D.value - r.B.value));
  }
}

TEST_CASE("calculus identity on randomized smooth radial functions") {
  std::mt19937_64 gen(20240611);
  const ProblemParams p(4, 1.0);
  const double mu_s = bubble_constants(p).mu_s;
  for (int trial = 0; trial < 10; ++trial) {
    CAPTURE(trial);
    const auto g = random_gaussians(gen);
    const auto in = gaussian_input(p, ManifoldModel::torus(4, 1.0), g, 0.0, mu_s, 1.0);
    const auto r = pohozaev_terms(in);
    CHECK(r.C.value == 0.0);
    CHECK(r.D.value == 0.0);
    CHECK(std::abs(r.B.value - pohozaev_volume(in).value) <= 1e-6);
  }
  // Curved metric, a ≠ 0 and a non-radial field: B − (C + D) is still the volume integral.
  const auto g = random_gaussians(gen);
  auto in = gaussian_input({5, 0.5}, ManifoldModel::perturbed_sphere(5, 1.0, 1.0, 0.2), g, 1.3, 2.0, 0.7);
  const auto base = in.u_hat;
  in.u_hat = [base](std::span<const double> X) {
    auto f = base(X);
    // multiply by (1 + 0.3 X₁): value, gradient and Hessian by the product rule.
    const double w = 1 + 0.3 * X[0];
    Point dw = Point::Zero(X.size());
    dw(0) = 0.3;
    f.hess = w * f.hess + f.grad * dw.transpose() + dw * f.grad.transpose();
    f.grad = w * f.grad + f.u * dw;
    f.u *= w;
    return f;
  };
  in.mu = 0.5;
  const auto r = pohozaev_terms(in);
  CHECK(r.B.value - (r.C.value + r.D.value) == doctest::Approx(pohozaev_volume(in).value).epsilon(1e-8));
}

TEST_CASE("tensor D against the radial reduction on round spheres") {
  std::mt19937_64 gen(3);
  for (int n : {4, 5}) {
    const auto g = random_gaussians(gen);
    for (double R : {1.0, 2.0}) {
      CAPTURE(n);
      CAPTURE(R);
      auto in = gaussian_input({n, 1.0}, ManifoldModel::sphere(n, R, 1.0), g, 0.0, 1.0, 1.0);
      const auto tensor = pohozaev_terms(in).D.value;
      const auto radial = sphere_radial_D(in, [g](double r) { return g.u(r); }, [g](double r) { return g.du(r); });
      CHECK(tensor == doctest::Approx(radial.value).epsilon(1e-10));
      in.radial = true;
      CHECK(pohozaev_terms(in).D.value == doctest::Approx(tensor).epsilon(1e-12));
    }
  }
}

TEST_CASE("ladder fits") {
  const std::vector<double> mu{1e-2, 1e-3, 1e-4};
  std::vector<double> y;
  for (double m : mu) y.push_back(5.0 - 3.0 * m);
  auto f = fit_ladder(mu, y, false);
  CHECK(f.slope == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(f.stable);
  y.clear();
  for (double m : mu) y.push_back(2.0 * std::log(1 / m) + 7.0);
  f = fit_ladder(mu, y, true);
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.ratio.back() == doctest::Approx(y.back() / std::log(1e4)));
  CHECK_THROWS_AS(fit_ladder({1e-2, 1e-3}, {1.0, 2.0}, false), InvalidArgument);
  CHECK_THROWS_AS(fit_ladder({1e-2, 1e-2, 1e-3}, {1.0, 2.0, 3.0}, false), InvalidArgument);
}

TEST_CASE("C slopes on flat bubble families") {
  const auto c5 = calpha_asymptotic({5, 1.0}, 1.0, {1e-2, 1e-3, 1e-4});
  CHECK(c5.slope == doctest::Approx(bubble_l2_squared({5, 1.0})).epsilon(0.02));
  const auto c4 = calpha_asymptotic({4, 1.0}, 1.0, {1e-4, 1e-5, 1e-6});
  const double K = bubble_constants({4, 1.0}).K;
  CHECK(c4.slope == doctest::Approx(2 * std::numbers::pi * std::numbers::pi * std::pow(K, 4)).epsilon(0.1));
  CHECK(c4.logarithmic);
  for (const auto& in : flat_bubble_ladder({5, 1.0}, 0.0, 1.0, {1e-2, 1e-3})) CHECK(pohozaev_terms(in).C.value == 0.0);
  CHECK_THROWS_AS(calpha_asymptotic({5, 1.0}, 1.0, {1e-2, 1e-3}), InvalidArgument);
}

TEST_CASE("log-moment lemma at n = 4") {
  const ProblemParams p(4, 1.0);
  const double K = bubble_constants(p).K, Kn = std::pow(2 * K * K, 2);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const std::vector<double> mus{1e-4, 1e-5, 1e-6};
  CHECK(log_moment_lemma(p, 1, 1, 1, 1, mus).slope == doctest::Approx(Kn * pi2 / 4).epsilon(0.1));
  CHECK(log_moment_lemma(p, 1, 2, 1, 2, mus).slope == doctest::Approx(Kn * pi2 / 12).epsilon(0.1));
  CHECK(std::abs(log_moment_lemma(p, 1, 2, 3, 4, mus).slope) < 1e-12);
  CHECK_THROWS_AS(log_moment_lemma({5, 1.0}, 1, 1, 1, 1, mus), InvalidArgument);
}

TEST_CASE("n = 3 bound C + D = O(delta mu)") {
  const ProblemParams p(3, 1.0);
  const double r1 = n3_bound_check(flat_bubble_ladder(p, 1.0, 0.5, {1e-2, 1e-3}));
  const double r2 = n3_bound_check(flat_bubble_ladder(p, 1.0, 0.5, {1e-3, 1e-4}));
  CHECK(r1 > 0);
  CHECK(r2 == doctest::Approx(r1).epsilon(0.1));
  // Halving δ halves |C + D|.
  const auto big = pohozaev_terms(flat_bubble_ladder(p, 1.0, 0.5, {1e-3}).front());
  const auto small = pohozaev_terms(flat_bubble_ladder(p, 1.0, 0.25, {1e-3}).front());
  CHECK(std::abs(small.C.value + small.D.value) / std::abs(big.C.value + big.D.value) == doctest::Approx(0.5).epsilon(0.1));
  CHECK(n3_bound_check(flat_bubble_ladder(p, 0.0, 0.5, {1e-2, 1e-3})) == 0.0);
  CHECK_THROWS_AS(n3_bound_check(flat_bubble_ladder({4, 1.0}, 1.0, 0.5, {1e-2})), InvalidArgument);
}

TEST_CASE("D slopes from solve ladders") {
  SUBCASE("unit S^5, s = 1") {
    const auto m = ManifoldModel::sphere(5, 1.0, 1.0);
    const RadialProblem pr{{5, 1.0}, m, RadialPotential(3.0), {}};
    const auto ladder = blowup_ladder(pr, {1e-2, 1e-3, 1e-4});
    const auto f = dalpha_asymptotic(m, ladder, 1.0);
    CHECK(f.slope == doctest::Approx(dalpha_target({5, 1.0}, 20.0)).epsilon(0.15));
    CHECK(dalpha_target({5, 1.0}, 20.0) == doctest::Approx(-cns({5, 1.0}) * 20 * bubble_l2_squared({5, 1.0})));
    // The transplanted solves satisfy the identity up to discretization error.
    for (const auto& r : ladder) {
      PohozaevInput in;
      in.params = r.params;
      in.metric = m;
      in.u_hat = profile_field(5, RadialProfile(r, RadialPotential(r.a_value)));
      in.a_hat = RadialPotential(r.a_value);
      in.lambda = r.lambda;
      in.mu = r.mu;
      in.radial = true;
      PohozaevOptions o;
      o.budget = kProfileBudget;
      o.tolerance = kProfileTolerance;
      const auto rep = pohozaev_terms(in, o);
      CHECK(rep.identity_residual <= 1e-2 * std::abs(rep.C.value));
    }
  }
  SUBCASE("unit S^4, s = 1 log slope") {
    const auto m = ManifoldModel::sphere(4, 1.0, 1.0);
    const RadialProblem pr{{4, 1.0}, m, RadialPotential(1.5), {}};
    const auto f = dalpha_asymptotic(m, blowup_ladder(pr, {1e-1, 1e-2, 1e-3}), 1.0);
    CHECK(f.logarithmic);
    CHECK(f.slope == doctest::Approx(dalpha_target({4, 1.0}, 12.0)).epsilon(0.15));
  }
  SUBCASE("flat torus") {
    const auto f = dalpha_asymptotic(flat_bubble_ladder({5, 1.0}, 1.0, 1.0, {1e-2, 1e-3, 1e-4}));
    CHECK(f.slope == 0.0);
  }
}

TEST_CASE("input validation and unresolved integrands") {
  auto in = unit_bubble({4, 1.0}, 1.0);
  in.delta = 10.0;
  CHECK_THROWS_AS(pohozaev_terms(in), InvalidArgument);
  in.delta = 1.0;
  in.u_hat = nullptr;
  CHECK_THROWS_AS(pohozaev_terms(in), InvalidArgument);
  // An oscillation far below the rule's resolution is rejected.
  auto wild = unit_bubble({4, 1.0}, 1.0);
  wild.a_hat = RadialPotential(1.0);
  wild.u_hat = radial_field(
      4, [](double r) { return std::cos(1e5 * r); }, [](double r) { return -1e5 * std::sin(1e5 * r); },
      [](double r) { return -1e10 * std::cos(1e5 * r); });
  CHECK_THROWS_AS(pohozaev_terms(wild), ConvergenceError);
}
