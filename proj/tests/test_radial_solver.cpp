#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hslab/bubbles.hpp"
#include "hslab/error.hpp"
#include "hslab/green_mass.hpp"
#include "hslab/radial_solver.hpp"

using namespace hslab;

namespace {

RadialProblem sphere_problem(int n, double s, double a, double eta = 0.02) {
  return {ProblemParams(n, s), ManifoldModel::sphere(n, 1.0, 0.5), RadialPotential(a), GridOptions{1e-6, eta, 4}};
}

Eigen::MatrixXd dense(const Tridiag& T) {
  const auto n = static_cast<Eigen::Index>(T.d.size());
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) D(i, i) = T.d[i];
  for (Eigen::Index i = 0; i + 1 < n; ++i) D(i, i + 1) = D(i + 1, i) = T.o[i];
  return D;
}

}  // namespace

TEST_CASE("tridiagonal solve and Sturm count") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> N;
  for (int n : {1, 2, 3, 8, 60}) {
    Tridiag T{std::vector<double>(n), std::vector<double>(n - 1)};
    for (auto& x : T.d) x = 0.1 * N(rng);  // strongly indefinite: pivoting is exercised
    for (auto& x : T.o) x = N(rng);
    std::vector<double> b(n);
    for (auto& x : b) x = N(rng);
    const auto x = T.solve(b);
    const Eigen::VectorXd ref = dense(T).lu().solve(Eigen::Map<Eigen::VectorXd>(b.data(), n));
    for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(ref(i)).epsilon(1e-9));

    Tridiag I{std::vector<double>(n, 1.0), std::vector<double>(n - 1, 0.0)};
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dense(T)).eigenvalues();
    for (double sigma : {-1.0, 0.0, 0.3}) {
      const int below = static_cast<int>((ev.array() < sigma).count());
      CHECK(T.negative_count(I, sigma) == below);
    }
  }
}

TEST_CASE("graded matrices are solved to working accuracy") {
  // Row scales spanning 1e-18 .. 1 as on the radial grid near the pole.
  const int n = 200;
  Tridiag T{std::vector<double>(n), std::vector<double>(n - 1)};
  for (int i = 0; i < n; ++i) T.d[i] = std::pow(10.0, -18.0 + 18.0 * i / (n - 1)) * (i % 3 == 0 ? -2.1 : 2.3);
  for (int i = 0; i + 1 < n; ++i) T.o[i] = -0.9 * std::sqrt(std::abs(T.d[i] * T.d[i + 1]));
  std::vector<double> xt(n);
  for (int i = 0; i < n; ++i) xt[i] = 1.0 + 0.5 * std::sin(i);
  const auto b = T.apply(xt);
  const auto x = T.solve(b);
  for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(xt[i]).epsilon(1e-8));
}

TEST_CASE("discretization weights") {
  for (int n : {3, 4, 5}) {
    for (double R : {1.0, 2.0}) {
      const RadialDiscretization D(ProblemParams(n, 0.5), ManifoldModel::sphere(n, R, 0.5));
      std::vector<double> one(D.size(), 1.0);
      // ∫ dv = |S^n_R|.
      const double vol = sphere_area(n + 1) * std::pow(R, n);
      CHECK(D.l2_squared(one) == doctest::Approx(vol).epsilon(1e-10));
      const auto M = D.mass();
      double s = 0;
      for (double v : M.apply(one)) s += v;
      CHECK(s == doctest::Approx(vol).epsilon(1e-10));
      // Constant functions are in the kernel of the stiffness part.
      const auto A = D.quadratic_form(RadialPotential(0.0));
      for (double v : A.apply(one)) CHECK(std::abs(v) < 1e-12 * vol);
    }
  }
  CHECK_THROWS_AS(RadialDiscretization(ProblemParams(4, 1.0), ManifoldModel::torus(4, 0.5)), InvalidArgument);
  CHECK_THROWS_AS(RadialDiscretization(ProblemParams(4, 1.0), ManifoldModel::sphere(5, 1.0, 0.5)), InvalidArgument);
  CHECK_THROWS_AS(RadialDiscretization(ProblemParams(4, 1.0), ManifoldModel::sphere(4, 1.0, 0.5), GridOptions{1e-6, 0.5, 4}),
                  InvalidArgument);
}

TEST_CASE("energy: homogeneity and linearity in the potential") {
  const auto pr = sphere_problem(4, 1.0, 1.0);
  const RadialDiscretization D(pr.params, pr.manifold, pr.grid);
  std::vector<double> u(D.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = 1.0 / (1.0 + 9.0 * D.nodes()[i] * D.nodes()[i]);
  const auto e = energy(pr, u);
  for (double t : {0.1, 3.0, 1e4}) {
    auto v = u;
    for (auto& x : v) x *= t;
    CHECK(energy(pr, v).J == doctest::Approx(e.J).epsilon(1e-12));
  }
  for (double c : {-0.5, 0.25, 2.0}) {
    const auto shifted = energy(D, RadialPotential(1.0 + c), u);
    const double expect = e.J + c * D.l2_squared(u) / std::pow(e.constraint, 2.0 / pr.params.two_star());
    CHECK(shifted.J == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK_THROWS_AS(energy(pr, std::vector<double>(D.size(), 0.0)), InvalidArgument);
  CHECK_THROWS_AS(energy(pr, std::vector<double>(3, 1.0)), InvalidArgument);
}

TEST_CASE("coercivity") {
  const auto pr = sphere_problem(4, 1.0, 0.0);
  const RadialDiscretization D(pr.params, pr.manifold, pr.grid);
  for (double a : {0.0, 0.7, 3.0}) CHECK(smallest_radial_eigenvalue(D, RadialPotential(a)) == doctest::Approx(a).epsilon(1e-9));
  // First nonconstant radial eigenvalue of S^4 is n = 4: a = −4.5 leaves it negative.
  CHECK(smallest_radial_eigenvalue(D, RadialPotential(-0.5)) < 0);
  CHECK_THROWS_AS(minimize(sphere_problem(4, 1.0, -0.5)), NonCoerciveError);
  // A non-constant potential: a = 1 + cos θ has mean-weighted eigenvalue in (0, 2).
  const double l = smallest_radial_eigenvalue(D, RadialPotential([](double t) { return 1.0 + std::cos(t); }));
  CHECK(l > 0.0);
  CHECK(l < 2.0);
}

TEST_CASE("minimize: normalized nonnegative minimizer") {
  for (auto [n, s, a] : {std::tuple{4, 1.0, 1.0}, {5, 0.5, 2.0}, {3, 1.0, 0.5}, {6, 1.0, 3.0}}) {
    CAPTURE(n);
    const auto pr = sphere_problem(n, s, a);
    const RadialSolver solver(pr);
    const auto r = solver.minimize();
    CHECK(r.converged);
    CHECK(r.status == "converged");
    CHECK(r.residual <= 1e-8);
    CHECK(r.constraint == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(*std::min_element(r.u.begin(), r.u.end()) > 0.0);
    CHECK(r.lambda == doctest::Approx(solver.energy(r.u).J).epsilon(1e-12));
    CHECK(r.morse_index == 1);
    CHECK(r.mu == doctest::Approx(std::pow(*std::max_element(r.u.begin(), r.u.end()), -2.0 / (n - 2))).epsilon(1e-14));
    CHECK(r.lambda < bubble_constants(pr.params).mu_s);

    // The transplanted bubble cut off at π/2 is an admissible competitor.
    std::vector<double> w(r.theta.size());
    const auto b = Bubble::normalized(pr.params, 0.3);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double th = r.theta[i];
      const double cut = th < 0.25 * std::numbers::pi ? 1.0 : th < 0.5 * std::numbers::pi ? std::pow(std::cos(2 * th - 0.5 * std::numbers::pi), 2) : 0.0;
      w[i] = b.profile(th) * cut;
    }
    CHECK(solver.energy(w).J >= r.lambda);
  }
}

TEST_CASE("a = 0: the constant function is the minimizer") {
  const auto r = minimize(sphere_problem(4, 1.0, 0.0));
  CHECK(r.converged);
  CHECK(std::abs(r.lambda) < 1e-12);
  const double spread = *std::max_element(r.u.begin(), r.u.end()) - *std::min_element(r.u.begin(), r.u.end());
  CHECK(spread < 1e-9);
}

TEST_CASE("second-order convergence under grid refinement") {
  double l[3];
  int i = 0;
  for (double eta : {0.04, 0.02, 0.01}) l[i++] = minimize(sphere_problem(4, 1.0, 1.0, eta)).lambda;
  CHECK((l[0] - l[1]) / (l[1] - l[2]) == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("threshold_crossing interpolation and flags") {
  std::vector<SweepRow> rows;
  for (double a : {0.0, 1.0, 2.0, 3.0}) rows.push_back({a, 0, 0, 0, 0, 0.1 - 0.04 * a, true, "converged"});
  // gap 0.1, 0.06, 0.02, −0.02: crosses 0.01 at a = 2.25.
  CHECK(*threshold_crossing(rows, 0.01) == doctest::Approx(2.25));
  CHECK(!threshold_crossing(rows, 0.5));  // first row already below
  CHECK(!threshold_crossing(rows, -0.5)); // never below
  CHECK_THROWS_AS(sweep_threshold(sphere_problem(4, 1.0, 0.0), {}), InvalidArgument);
  CHECK_THROWS_AS(sweep_threshold(sphere_problem(4, 1.0, 0.0), {1.0, 0.5}), InvalidArgument);
}

TEST_CASE("threshold sweep on S^4, s = 1") {
  std::vector<double> grid;
  for (double a = 0.5; a <= 2.5 + 1e-9; a += 0.1) grid.push_back(a);
  const auto sw = sweep_threshold(sphere_problem(4, 1.0, 0.0), grid, 1e-3, 2);
  CHECK(sw.status == "ok");
  CHECK(sw.monotone);
  REQUIRE(sw.a_star);
  CHECK(std::abs(*sw.a_star - 2.0) < 0.2);
  REQUIRE(sw.a_star_loose);
  REQUIRE(sw.a_star_tight);
  CHECK(*sw.a_star_loose <= *sw.a_star);
  CHECK(*sw.a_star <= *sw.a_star_tight);
  // μ_a decreases toward the threshold along converged rows.
  double prev = INFINITY;
  for (const auto& r : sw.rows) {
    if (!r.converged) continue;
    CHECK(r.mu < prev);
    prev = r.mu;
    if (r.a <= 1.5) CHECK(r.gap > 0);
  }
  // Rerunning with one thread gives identical rows.
  const auto again = sweep_threshold(sphere_problem(4, 1.0, 0.0), grid, 1e-3, 1);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(again.rows[i].lambda == sw.rows[i].lambda);
}

TEST_CASE("blow-up ladder on S^4 and the pointwise estimates") {
  const auto pr = sphere_problem(4, 1.0, 1.5);
  const auto ladder = blowup_ladder(pr, {1e-1, 1e-2, 1e-3});
  REQUIRE(ladder.size() == 3);
  std::vector<double> cu, grad, green;
  double a_prev = 0;
  for (const auto& r : ladder) {
    CHECK(r.converged);
    CHECK(r.morse_index == 1);
    CHECK(r.constraint == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.a_value > a_prev);
    a_prev = r.a_value;
    CHECK(r.argmax_theta == r.theta.front());
    const auto pb = pointwise_bound_check(r);
    CHECK(pb.C_lower > 0);
    CHECK(pb.C_lower <= pb.C_upper);
    cu.push_back(pb.C_upper);
    grad.push_back(gradient_bound_check(r));
    const auto G = solve_green(pr.manifold, RadialPotential(r.a_value));
    green.push_back(green_profile_check(r, G));
    // d_n = (n−2)ω K^{n−2}: the bubbles-module identity.
    const auto bc = bubble_constants(r.params);
    const double dn = (r.params.n - 2) * bc.omega * std::pow(bc.K, r.params.n - 2);
    CHECK(std::abs(green_profile_check(r, G, dn) - green.back()) < 1e-8);
  }
  CHECK(ladder[2].mu == doctest::Approx(1e-3).epsilon(1e-10));
  CHECK(*std::max_element(cu.begin(), cu.end()) / *std::min_element(cu.begin(), cu.end()) < 2.0);
  CHECK(*std::max_element(grad.begin(), grad.end()) / *std::min_element(grad.begin(), grad.end()) < 2.0);
  CHECK(green[1] < green[0]);
  CHECK(green[2] < green[1]);
  CHECK_THROWS_AS(blowup_ladder(pr, {1e-2, 1e-1}), InvalidArgument);
}

TEST_CASE("pointwise expressions on exact bubbles") {
  const ProblemParams p(4, 1.0);
  const double K = bubble_constants(p).K;
  double g0 = 0;
  for (double mu : {1e-1, 1e-2, 1e-3}) {
    // Same points in x = θ/μ for every μ, so the sup is scale invariant.
    std::vector<double> th;
    for (int i = 0; i <= 400; ++i) th.push_back(mu * 1e-4 * std::pow(1e6, i / 400.0));
    // μ-rescaled normalized bubble: μ^{−(n−2)/2}ũ(θ/μ), ũ with c0 = K.
    const auto b = Bubble::normalized(p, K);
    std::vector<double> u, du;
    for (double t : th) {
      u.push_back(std::pow(mu, -1.0) * b.profile(t / mu));
      du.push_back(std::pow(mu, -2.0) * b.dprofile(t / mu));
    }
    const auto pb = pointwise_bound_check(p, th, u, mu);
    CHECK(pb.C_upper == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pb.C_lower == doctest::Approx(1.0).epsilon(1e-12));
    const double g = gradient_bound_check(p, th, du, mu);
    if (g0 == 0) g0 = g;
    CHECK(g == doctest::Approx(g0).epsilon(1e-9));
  }
}

TEST_CASE("radial profile reconstruction") {
  const auto pr = sphere_problem(4, 1.0, 1.8);
  const auto r = minimize(pr);
  const RadialProfile prof(r, pr.a);
  for (std::size_t i = 0; i < r.theta.size(); i += 37) CHECK(prof.value(r.theta[i]) == doctest::Approx(r.u[i]).epsilon(1e-12));
  // u″ from the Euler–Lagrange equation agrees with differentiating the spline slope.
  for (double th : {0.01, 0.1, 0.5, 1.0, 2.0}) {
    const double e = 1e-4 * th;
    const double fd = (prof.d1(th + e) - prof.d1(th - e)) / (2 * e);
    CHECK(prof.d2(th) == doctest::Approx(fd).epsilon(2e-3));
  }
  CHECK(prof.max_theta() == doctest::Approx(std::numbers::pi));
}
