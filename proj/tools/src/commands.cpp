#include "hslab/runner/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "hslab/bubbles.hpp"
#include "hslab/error.hpp"
#include "hslab/geometry.hpp"
#include "hslab/green_mass.hpp"
#include "hslab/params.hpp"
#include "hslab/pohozaev.hpp"
#include "hslab/radial_solver.hpp"

namespace hslab::runner {

namespace {

using nlohmann::json;
constexpr double kPi = std::numbers::pi;

std::mutex g_ops_mutex;
std::set<std::string> g_ops;

void used(const char* op) {
  std::lock_guard lock(g_ops_mutex);
  g_ops.insert(op);
}

double tol(const ExperimentConfig& c, double dflt) { return c.tol.value_or(dflt); }

// Runs one stage; a numerical failure turns into a failed check named after it.
template <class F>
void guard(Report& r, const std::string& stage, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    r.add(failed(stage, e.what()));
  }
}

std::string tag(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

ProblemParams params(const ExperimentConfig& c) { return {c.n, c.s}; }

void require_sphere(const ExperimentConfig& c, const char* what) {
  if (c.model.kind != ManifoldKind::Sphere)
    throw ConfigError("$.manifold", std::string(what) + " needs a round sphere (sphere[:R])");
}

void require_dim(bool ok, const char* what) {
  if (!ok) throw ConfigError("$.n", what);
}

std::vector<double> along(int n, double t) {
  std::vector<double> dir{0.2, 0.5, -0.4, 0.7, 0.1, -0.3, 0.6, 0.25};
  dir.resize(static_cast<std::size_t>(n));
  double nn = 0;
  for (double d : dir) nn += d * d;
  for (auto& d : dir) d *= t / std::sqrt(nn);
  return dir;
}

RadialProblem radial_problem(const ExperimentConfig& c, double a) {
  return {params(c), ManifoldModel::from_spec(c.model), RadialPotential(a), GridOptions{1e-6, c.grid_step, 4}};
}

// ---------------------------------------------------------------------------

// μ_s through the Beta function, independent of the radial quadrature.
double mu_s_closed_form(const ProblemParams& p) {
  const double t = 2.0 - p.s, a = (p.n - p.s) / t;
  const double I = sphere_area(p.n) * std::beta(a, a) / t;
  return (p.n - 2) * (p.n - p.s) * std::pow(I, t / (p.n - p.s));
}

// s as a fraction with denominator at most 1000.
std::optional<std::pair<std::int64_t, std::int64_t>> as_fraction(double s) {
  for (std::int64_t d = 1; d <= 1000; ++d) {
    const double v = s * static_cast<double>(d);
    if (std::abs(v - std::round(v)) < 1e-9) return std::pair{static_cast<std::int64_t>(std::llround(v)), d};
  }
  return std::nullopt;
}

void constants(const ExperimentConfig& c, Report& r) {
  const auto p = params(c);
  used("bubbles::critical_exponent");
  used("bubbles::cns");
  auto& t = r.table("constants", {"name", "value"});
  const double ts = critical_exponent(p), cv = cns(p);
  t.rows.push_back({"two_star", ts});
  t.rows.push_back({"cns", cv});
  if (const auto f = as_fraction(c.s)) {
    const auto [num, den] = *f;
    const Rational q = cns_rational(c.n, num, den);
    r.values["cns_rational"] = std::to_string(q.num) + "/" + std::to_string(q.den);
    r.add(relative("cns", cv, q.value(), tol(c, 1e-15)));
    const double two_star = 2.0 * static_cast<double>(c.n * den - num) / static_cast<double>((c.n - 2) * den);
    r.add(relative("critical_exponent", ts, two_star, tol(c, 1e-15)));
  } else {
    r.values["cns_rational"] = nullptr;
  }
  guard(r, "mu_s", [&] {
    used("bubbles::best_constant_quadrature");
    const double mu = best_constant_quadrature(p), closed = mu_s_closed_form(p);
    t.rows.push_back({"mu_s", mu});
    t.rows.push_back({"mu_s_closed_form", closed});
    r.add(relative("mu_s", mu, closed, tol(c, 1e-11)));
  });
  guard(r, "defk_closure", [&] {
    const auto k = bubble_constants(p);
    t.rows.push_back({"K", k.K});
    t.rows.push_back({"d_n", k.d_n});
    r.add(close("defk_closure", defk_closure(p), 0.0, tol(c, 1e-8)));
  });
}

void bubble_verify(const ExperimentConfig& c, Report& r) {
  const auto p = params(c);
  guard(r, "bubble", [&] {
    used("bubbles::bubble_eval");
    const auto b = Bubble::canonical(p);
    const std::vector<double> zero(static_cast<std::size_t>(c.n), 0.0);
    r.add(close("center_value", b(zero), 1.0, tol(c, 1e-15)));
    used("bubbles::normalization_check");
    r.add(close("normalization", normalization_check(b), 1.0, tol(c, 1e-8)));
    r.add(close("defk_closure", defk_closure(p), 0.0, tol(c, 1e-8)));
    const double dn = (c.n - 2) * b.omega() * std::pow(b.K(), c.n - 2);
    r.add(relative("d_n", b.d_n(), dn, tol(c, 1e-8)));
    used("bubbles::pde_residual");
    auto& t = r.table("profile", {"r", "u", "du", "d2u", "pde_residual"});
    for (double x = 1e-3; x <= 1e3 * (1 + 1e-12); x *= std::sqrt(10.0)) {
      const double res = pde_residual(b, x);
      t.rows.push_back({x, b.profile(x), b.dprofile(x), b.d2profile(x), res});
    }
    for (double x : {1e-3, 1.0, 1e3}) {
      const double res = pde_residual(b, x);
      r.add(at_most("pde_residual@r=" + tag(x), res, tol(c, 1e-8)));
    }
    r.values["K"] = b.K();
    r.values["mu_s"] = b.mu_s();
  });
  guard(r, "gamma_identity", [&] {
    used("bubbles::gamma_integral_identity");
    const auto g = gamma_integral_identity(p);
    r.add(relative("gamma_identity", g.lhs, g.rhs, tol(c, 1e-8)));
  });
  guard(r, "rayleigh_scale_invariance", [&] {
    used("bubbles::best_constant_quadrature");
    const double q1 = rayleigh_quotient(p, 1.0);
    double worst = 0;
    for (double sc : {0.1, 0.5, 2.0, 10.0}) worst = std::max(worst, std::abs(rayleigh_quotient(p, sc) - q1) / q1);
    r.add(at_most("rayleigh_scale_invariance", worst, tol(c, 1e-10)));
  });
  if (c.n >= 5) {
    guard(r, "weighted_gradient_ratio", [&] {
      used("bubbles::rayleigh_ratio_identity");
      const auto q = rayleigh_ratio_identity(p);
      r.add(relative("weighted_gradient_ratio", q.lhs, q.rhs, tol(c, 1e-6)));
      r.values["l2_squared"] = bubble_l2_squared(p);
    });
  }
}

// ---------------------------------------------------------------------------

void sphere_moments(const ExperimentConfig& c, Report& r) {
  const int n = c.n;
  used("geometry::sphere_moment2");
  used("geometry::sphere_moment4");
  std::map<std::vector<int>, double> quad;
  auto q = [&](std::vector<int> e) {
    e.resize(static_cast<std::size_t>(n), 0);
    auto it = quad.find(e);
    if (it == quad.end()) it = quad.emplace(e, sphere_monomial_quadrature(n, e)).first;
    return it->second;
  };
  auto exps = [&](std::initializer_list<int> idx) {
    std::vector<int> e(static_cast<std::size_t>(n), 0);
    for (int i : idx) ++e[static_cast<std::size_t>(i - 1)];
    return e;
  };
  double worst2 = 0, worst4 = 0;
  for (int m = 1; m <= n; ++m)
    for (int k = 1; k <= n; ++k) worst2 = std::max(worst2, std::abs(sphere_moment2(n, m, k) - q(exps({m, k}))));
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      for (int a = 1; a <= n; ++a)
        for (int b = 1; b <= n; ++b)
          worst4 = std::max(worst4, std::abs(sphere_moment4(n, i, j, a, b) - q(exps({i, j, a, b}))));
  r.add(at_most("moment2_max_error", worst2, tol(c, 1e-10)));
  r.add(at_most("moment4_max_error", worst4, tol(c, 1e-10)));

  double odd = 0;
  for (const auto& e : std::vector<std::vector<int>>{{1}, {3}, {2, 1}, {1, 1, 1}, {5}, {3, 2}, {2, 2, 1}, {1, 1, 1, 2}})
    if (static_cast<int>(e.size()) <= n) odd = std::max(odd, std::abs(q(e)));
  r.add(at_most("odd_moments", odd, tol(c, 1e-10)));

  if (n == 4) {
    const double pi2 = kPi * kPi;
    r.add(close("moment4_1122", q({2, 2}), pi2 / 12, tol(c, 1e-10)));
    r.add(close("moment4_1111", q({4}), pi2 / 4, tol(c, 1e-10)));
  }

  // Seeded Monte Carlo against the exact values, at five standard errors.
  const double area = sphere_area(n);
  auto& t = r.table("moments", {"exponents", "exact", "quadrature", "monte_carlo", "mc_stderr"});
  const std::vector<std::pair<std::vector<int>, std::array<int, 4>>> cases{
      {{2}, {1, 1, 0, 0}}, {{1, 1}, {1, 2, 0, 0}}, {{4}, {1, 1, 1, 1}}, {{2, 2}, {1, 1, 2, 2}}, {{3, 1}, {1, 1, 1, 2}}};
  for (const auto& [e, idx] : cases) {
    std::vector<int> ex = e, sq = e;
    ex.resize(static_cast<std::size_t>(n), 0);
    for (auto& v : sq) v *= 2;
    const double exact = idx[2] == 0 ? sphere_moment2(n, idx[0], idx[1]) : sphere_moment4(n, idx[0], idx[1], idx[2], idx[3]);
    const double mc = sphere_monomial_monte_carlo(n, ex, c.samples, c.seed);
    const double var = q(sq) / area - std::pow(exact / area, 2);
    const double se = area * std::sqrt(std::max(var, 0.0) / static_cast<double>(c.samples));
    std::string name;
    for (int v : e) name += std::to_string(v);
    t.rows.push_back({name, exact, q(e), mc, se});
    r.add(close("monte_carlo_" + name, mc, exact, c.tol ? *c.tol : 5 * se));
  }
}

void curvature(const ExperimentConfig& c, Report& r) {
  const auto m = ManifoldModel::from_spec(c.model);
  const double scal = m.scal_x0();
  r.values["scal"] = scal;
  guard(r, "curvature_identities", [&] {
    used("geometry::curvature_identities");
    const auto k = curvature_identities(m);
    r.add(close("sum_dij_gij", k.sum_dij_gij, scal / 3, tol(c, 1e-3)));
    r.add(close("sum_dbb_gii", k.sum_dbb_gii, -2 * scal / 3, tol(c, 1e-3)));
    r.add(close("sum_dk_gamma", k.sum_dk_gamma, 2 * scal / 3, tol(c, 1e-3)));
    r.add(at_most("gauge_defect", gauge_defect(m), tol(c, 1e-8)));
  });
  guard(r, "christoffel", [&] {
    used("geometry::christoffel");
    const std::vector<double> zero(static_cast<std::size_t>(c.n), 0.0);
    r.add(at_most("christoffel_at_origin", christoffel(m, zero, 1e-3).max_abs(), tol(c, 1e-10)));
    if (m.kind() == ManifoldKind::Sphere) {
      const auto Y = along(c.n, 0.1 * m.radius());
      const auto G = christoffel(m, Y, 1e-3 * m.radius());
      const auto E = sphere_christoffel_exact(c.n, m.radius(), Y);
      double worst = 0;
      for (int k = 0; k < c.n; ++k)
        for (int i = 0; i < c.n; ++i)
          for (int j = 0; j < c.n; ++j) worst = std::max(worst, std::abs(G(k, i, j) - E(k, i, j)));
      r.add(at_most("christoffel_vs_closed_form", worst, tol(c, 1e-8)));
    }
  });
  guard(r, "cartan", [&] {
    used("geometry::cartan_residual");
    auto& t = r.table("cartan", {"t", "residual"});
    for (double x = 0.0025; x < 0.1; x *= 2) t.rows.push_back({x, cartan_residual(m, along(c.n, x))});
    const double t1 = 0.01;
    const double r1 = cartan_residual(m, along(c.n, t1)), r2 = cartan_residual(m, along(c.n, 2 * t1));
    if (m.kind() == ManifoldKind::Torus) {
      r.add(close("cartan_residual_flat", r2, 0.0, 0.0));
      return;
    }
    const bool symmetric = m.kind() == ManifoldKind::Sphere || m.cubic() == 0.0;
    auto ch = relative("cartan_ratio", r2 / r1, symmetric ? 16.0 : 8.0, tol(c, 0.2));
    ch.note = symmetric ? "locally symmetric model: quartic remainder" : "cubic remainder";
    r.add(ch);
  });
}

// ---------------------------------------------------------------------------

void solve(const ExperimentConfig& c, Report& r) {
  require_sphere(c, "solve");
  const auto pr = radial_problem(c, c.a.value_or(0.0));
  const double mu_s = bubble_constants(pr.params).mu_s;
  r.values["mu_s"] = mu_s;
  guard(r, "minimize", [&] {
    used("radial_solver::minimize");
    used("radial_solver::energy");
    const auto res = minimize(pr);
    r.add(holds("converged", res.converged, res.status));
    r.add(close("normalization", res.constraint, 1.0, tol(c, 1e-10)));
    r.add(at_most("el_residual", res.residual, tol(c, 1e-8)));
    const auto e = energy(pr, res.u);
    r.add(relative("energy_equals_lambda", e.J, res.lambda, tol(c, 1e-8)));
    r.add(at_most("lambda_below_mu_s", res.lambda, mu_s));
    r.values["lambda"] = res.lambda;
    r.values["mu"] = res.mu;
    r.values["argmax_theta"] = res.argmax_theta;
    r.values["gap"] = (mu_s - res.lambda) / mu_s;
    r.values["status"] = res.status;
    r.values["iterations"] = res.iterations;
    r.values["smallest_eigenvalue"] = res.smallest_eigenvalue;
    auto& t = r.table("profile", {"theta", "u"});
    for (std::size_t i = 0; i < res.u.size(); ++i) t.rows.push_back({res.theta[i], res.u[i]});
  });
  if (c.mu_ladder.empty()) return;
  guard(r, "ladder", [&] {
    const auto ladder = blowup_ladder(pr, c.mu_ladder);
    used("radial_solver::pointwise_bound_check");
    used("radial_solver::gradient_bound_check");
    used("radial_solver::green_profile_check");
    used("green_mass::solve_green");
    auto& t = r.table("ladder", {"mu", "a", "lambda", "residual", "morse_index", "status", "C_upper", "C_lower",
                                 "gradient_bound", "green_discrepancy"});
    const auto bc = bubble_constants(pr.params);
    const double dn = (c.n - 2) * bc.omega * std::pow(bc.K, c.n - 2);
    std::vector<double> cu, cl, grad, green;
    bool ok = true;
    double dn_shift = 0;
    for (const auto& x : ladder) {
      ok = ok && x.converged && x.morse_index == 1;
      const auto pb = pointwise_bound_check(x);
      const auto G = solve_green(pr.manifold, RadialPotential(x.a_value));
      cu.push_back(pb.C_upper);
      cl.push_back(pb.C_lower);
      grad.push_back(gradient_bound_check(x));
      green.push_back(green_profile_check(x, G));
      dn_shift = std::max(dn_shift, std::abs(green_profile_check(x, G, dn) - green.back()));
      t.rows.push_back({x.mu, x.a_value, x.lambda, x.residual, x.morse_index, x.status, pb.C_upper, pb.C_lower,
                        grad.back(), green.back()});
    }
    auto spread = [](const std::vector<double>& v) {
      return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
    };
    r.add(holds("ladder_converged", ok && ladder.size() == c.mu_ladder.size(), "every rung converged with Morse index 1"));
    r.add(above("C_lower", *std::min_element(cl.begin(), cl.end()), 0.0));
    r.add(at_most("C_upper_spread", spread(cu), 2.0));
    r.add(at_most("gradient_bound_spread", spread(grad), 2.0));
    bool decreasing = true;
    for (std::size_t i = 1; i < green.size(); ++i) decreasing = decreasing && green[i] < green[i - 1];
    r.add(holds("green_discrepancy_decreasing", decreasing));
    r.add(at_most("d_n_consistency", dn_shift, tol(c, 1e-8)));
  });
}

std::vector<double> default_sweep_grid(double target) {
  std::vector<double> g;
  for (int i = 0; i <= 40; ++i) g.push_back(target * (0.25 + 0.025 * i));
  return g;
}

void sweep(const ExperimentConfig& c, Report& r) {
  require_sphere(c, "sweep");
  const auto pr = radial_problem(c, 0.0);
  const double target = cns(pr.params) * pr.manifold.scal_x0();
  const auto grid = c.a_grid ? *c.a_grid : default_sweep_grid(target);
  r.values["a_star_expected"] = target;
  guard(r, "sweep_threshold", [&] {
    used("radial_solver::sweep_threshold");
    used("radial_solver::minimize");
    const auto sw = sweep_threshold(pr, grid, c.gap, c.threads);
    auto& t = r.table("sweep", {"a", "lambda", "mu", "argmax_theta", "residual", "gap", "converged", "status"});
    for (const auto& x : sw.rows)
      t.rows.push_back({x.a, x.lambda, x.mu, x.argmax_theta, x.residual, x.gap, x.converged, x.status});
    r.values["mu_s"] = sw.mu_s;
    r.values["status"] = sw.status;
    r.values["a_star"] = sw.a_star ? json(*sw.a_star) : json(nullptr);
    r.values["a_star_loose"] = sw.a_star_loose ? json(*sw.a_star_loose) : json(nullptr);
    r.values["a_star_tight"] = sw.a_star_tight ? json(*sw.a_star_tight) : json(nullptr);
    r.add(holds("gap_closes_in_grid", sw.status == "ok", sw.status));
    r.add(holds("lambda_monotone", sw.monotone));
    double prev = INFINITY, below = INFINITY;
    bool mu_down = true;
    for (const auto& x : sw.rows) {
      if (x.a <= 0.75 * target) below = std::min(below, x.gap);
      if (!x.converged) continue;
      mu_down = mu_down && x.mu < prev;
      prev = x.mu;
    }
    r.add(holds("mu_decreasing", mu_down));
    if (std::isfinite(below)) r.add(above("gap_below_threshold", below, 0.0));
    r.add(sw.a_star ? relative("a_star", *sw.a_star, target, tol(c, 0.1))
                    : failed("a_star", "the gap never closes on this grid"));
  });
}

// ---------------------------------------------------------------------------

// u = Σ c_k exp(−b_k r²) with seeded coefficients.
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

void pohozaev(const ExperimentConfig& c, Report& r) {
  const auto p = params(c);
  used("pohozaev::pohozaev_terms");
  auto& t = r.table("terms", {"case", "B", "B_error", "C", "D", "D1", "D2", "D3", "D4", "volume", "identity_residual"});
  const double k = 0.5 * (c.n - 2);
  guard(r, "flat_bubble", [&] {
    auto in = flat_bubble_ladder(p, 0.0, c.delta, {0.5}).front();
    in.u_hat = bubble_field(Bubble::canonical(p));
    in.mu = 1.0;
    const auto x = pohozaev_terms(in);
    const double vol = pohozaev_volume(in).value;
    t.rows.push_back({"flat_bubble", x.B.value, x.B.error, x.C.value, x.D.value, x.D1.value, x.D2.value, x.D3.value,
                      x.D4.value, vol, x.identity_residual});
    r.add(at_most("flat_bubble_B", std::abs(x.B.value), tol(c, 1e-6)));
    r.add(close("flat_bubble_C", x.C.value, 0.0, 0.0));
    r.add(close("flat_bubble_D", x.D.value, 0.0, 0.0));
  });
  guard(r, "calculus_identity", [&] {
    std::mt19937_64 gen(c.seed);
    const double mu_s = bubble_constants(p).mu_s;
    double worst = 0;
    for (int trial = 0; trial < 10; ++trial) {
      const auto in = gaussian_input(p, ManifoldModel::torus(c.n, c.delta), random_gaussians(gen), 0.0, mu_s, c.delta);
      const auto x = pohozaev_terms(in);
      const double vol = pohozaev_volume(in).value;
      worst = std::max(worst, std::abs(x.B.value - (x.C.value + x.D.value) - vol));
      t.rows.push_back({"random_" + std::to_string(trial), x.B.value, x.B.error, x.C.value, x.D.value, x.D1.value,
                        x.D2.value, x.D3.value, x.D4.value, vol, x.identity_residual});
    }
    r.add(at_most("calculus_identity", worst, tol(c, 1e-6)));
  });
  if (c.model.kind == ManifoldKind::Torus) return;
  guard(r, "curved_identity", [&] {
    std::mt19937_64 gen(c.seed + 1);
    auto spec = c.model;
    spec.delta = c.delta;
    auto in = gaussian_input(p, ManifoldModel::from_spec(spec), random_gaussians(gen), c.a.value_or(1.3), 2.0, c.delta);
    // Break radial symmetry: multiply by 1 + 0.3 X₁.
    const auto base = in.u_hat;
    in.u_hat = [base](std::span<const double> X) {
      auto f = base(X);
      const double w = 1 + 0.3 * X[0];
      Point dw = Point::Zero(static_cast<Eigen::Index>(X.size()));
      dw(0) = 0.3;
      f.hess = w * f.hess + f.grad * dw.transpose() + dw * f.grad.transpose();
      f.grad = w * f.grad + f.u * dw;
      f.u *= w;
      return f;
    };
    const auto x = pohozaev_terms(in);
    const double vol = pohozaev_volume(in).value;
    t.rows.push_back({"curved", x.B.value, x.B.error, x.C.value, x.D.value, x.D1.value, x.D2.value, x.D3.value,
                      x.D4.value, vol, x.identity_residual});
    r.add(holds("assembly_identity", x.D.value == x.D1.value - x.D2.value + k * (x.D3.value - x.D4.value)));
    r.add(close("curved_identity", x.B.value - (x.C.value + x.D.value), vol, tol(c, 1e-8) * std::max(1.0, std::abs(vol))));
  });
}

void fit_rows(Table& t, const std::string& part, const LadderFit& f) {
  for (std::size_t i = 0; i < f.mu.size(); ++i) t.rows.push_back({part, f.mu[i], f.ratio[i], f.slope, f.error, f.stable});
}

std::vector<double> ladder_or(const ExperimentConfig& c, std::vector<double> dflt) {
  return c.mu_ladder.empty() ? dflt : c.mu_ladder;
}

void calpha_part(const ExperimentConfig& c, Report& r, Table& t) {
  const auto p = params(c);
  const double a = c.a.value_or(1.0);
  guard(r, "calpha_slope", [&] {
    used("pohozaev::calpha_asymptotic");
    const auto f = calpha_asymptotic(p, a, ladder_or(c, c.n == 4 ? std::vector{1e-4, 1e-5, 1e-6} : std::vector{1e-2, 1e-3, 1e-4}),
                                     c.delta, c.threads);
    fit_rows(t, "calpha", f);
    r.add(relative("calpha_slope", f.slope, calpha_target(p, a), tol(c, c.n == 4 ? 0.1 : 0.02)));
  });
}

void log_moment_part(const ExperimentConfig& c, Report& r, Table& t) {
  const auto p = params(c);
  const double K = bubble_constants(p).K, Kn = std::pow(2 * K * K, 2);
  const auto mus = ladder_or(c, {1e-4, 1e-5, 1e-6});
  used("pohozaev::log_moment_lemma");
  for (auto [i, j, b1, b2] : {std::array{1, 1, 1, 1}, std::array{1, 2, 1, 2}, std::array{1, 2, 3, 4}}) {
    const std::string name = "log_moment_" + std::to_string(i) + std::to_string(j) + std::to_string(b1) + std::to_string(b2);
    guard(r, name, [&] {
      const auto f = log_moment_lemma(p, i, j, b1, b2, mus, c.delta);
      fit_rows(t, name, f);
      const double target = Kn * sphere_moment4(4, i, j, b1, b2);
      r.add(target == 0.0 ? close(name, f.slope, 0.0, tol(c, 1e-10)) : relative(name, f.slope, target, tol(c, 0.1)));
    });
  }
}

void dalpha_part(const ExperimentConfig& c, Report& r, Table& t) {
  const auto p = params(c);
  if (c.model.kind == ManifoldKind::Sphere) {
    guard(r, "dalpha_slope", [&] {
      used("pohozaev::dalpha_asymptotic");
      used("radial_solver::minimize");
      const auto m = ManifoldModel::from_spec(c.model);
      const double target_a = cns(p) * m.scal_x0();
      const auto pr = radial_problem(c, c.a.value_or(target_a - 0.5));
      const auto ladder = blowup_ladder(pr, ladder_or(c, c.n == 4 ? std::vector{1e-1, 1e-2, 1e-3} : std::vector{1e-2, 1e-3, 1e-4}));
      const auto f = dalpha_asymptotic(m, ladder, c.delta, c.threads);
      fit_rows(t, "dalpha", f);
      r.values["dalpha_stable"] = f.stable;
      r.add(relative("dalpha_slope", f.slope, dalpha_target(p, m.scal_x0()), tol(c, 0.15)));
    });
  }
  guard(r, "dalpha_flat", [&] {
    used("pohozaev::dalpha_asymptotic");
    const auto f = dalpha_asymptotic(flat_bubble_ladder(p, c.a.value_or(1.0), c.delta,
                                                        ladder_or(c, c.n == 4 ? std::vector{1e-1, 1e-2, 1e-3} : std::vector{1e-2, 1e-3, 1e-4})),
                                     c.threads);
    fit_rows(t, "dalpha_flat", f);
    r.add(close("dalpha_flat_slope", f.slope, 0.0, tol(c, 1e-12)));
  });
}

void n3_part(const ExperimentConfig& c, Report& r, Table& t) {
  const auto p = params(c);
  const double a = c.a.value_or(1.0), delta = std::min(c.delta, 0.5);
  guard(r, "n3_bound", [&] {
    used("pohozaev::n3_bound_check");
    const double r1 = n3_bound_check(flat_bubble_ladder(p, a, delta, {1e-2, 1e-3}));
    const double r2 = n3_bound_check(flat_bubble_ladder(p, a, delta, {1e-3, 1e-4}));
    t.rows.push_back({"n3_bound", 1e-3, r1, r1, 0.0, true});
    t.rows.push_back({"n3_bound", 1e-4, r2, r2, 0.0, true});
    r.values["n3_bound"] = r2;
    r.add(relative("n3_bound_stable", r2, r1, tol(c, 0.1)));
    r.add(close("n3_bound_zero_potential", n3_bound_check(flat_bubble_ladder(p, 0.0, delta, {1e-2, 1e-3})), 0.0, 0.0));
    const auto big = pohozaev_terms(flat_bubble_ladder(p, a, delta, {1e-3}).front());
    const auto small = pohozaev_terms(flat_bubble_ladder(p, a, delta / 2, {1e-3}).front());
    r.add(relative("n3_delta_order", std::abs(small.C.value + small.D.value) / std::abs(big.C.value + big.D.value), 0.5,
                   tol(c, 0.1)));
  });
}

Table& fit_table(Report& r) { return r.table("fits", {"part", "mu", "ratio", "slope", "error", "stable"}); }

void pohozaev_asymptotics(const ExperimentConfig& c, Report& r) {
  auto& t = fit_table(r);
  if (c.n == 3) return n3_part(c, r, t);
  calpha_part(c, r, t);
  if (c.n == 4) log_moment_part(c, r, t);
  dalpha_part(c, r, t);
}

// ---------------------------------------------------------------------------

std::vector<double> h_grid(const ExperimentConfig& c) {
  if (c.a_grid) return *c.a_grid;
  if (c.a) return {*c.a};
  return {0.5, 0.625, 0.75, 0.875, 1.0};
}

void mass_cmd(const ExperimentConfig& c, Report& r) {
  require_sphere(c, "mass");
  require_dim(c.n == 3, "the mass is defined for n = 3");
  const auto m = ManifoldModel::from_spec(c.model);
  const auto hs = h_grid(c);
  const double conformal = m.scal_x0() / 8;
  guard(r, "mass", [&] {
    used("green_mass::mass");
    used("green_mass::solve_green");
    const auto sw = mass_sweep(m, hs, c.threads);
    auto& t = r.table("mass", {"h", "mass", "error", "primary", "secondary", "windows_agree", "ode_residual", "G_min"});
    bool agree = true, positive = true;
    double worst_ode = 0;
    for (const auto& x : sw.reports) {
      const auto G = solve_green(m, RadialPotential(x.h));
      const double ode = G.max_ode_residual();
      const double gmin = *std::min_element(G.values().begin(), G.values().end());
      worst_ode = std::max(worst_ode, ode);
      positive = positive && gmin > 0;
      agree = agree && x.windows_agree;
      t.rows.push_back({x.h, x.mass, x.error, x.primary.mass, x.secondary.mass, x.windows_agree, ode, gmin});
      if (std::abs(x.h - conformal) <= 1e-12 * conformal)
        r.add(close("mass_at_conformal_h", x.mass, 0.0, tol(c, 1e-3)));
    }
    r.add(holds("windows_agree", agree));
    r.add(holds("green_positive", positive));
    r.add(at_most("green_ode_residual", worst_ode, tol(c, 1e-8)));
    if (hs.size() > 1) r.add(holds("mass_decreasing", sw.decreasing));
  });
}

void mass_root(const ExperimentConfig& c, Report& r) {
  require_sphere(c, "mass-root");
  require_dim(c.n == 3, "the mass is defined for n = 3");
  const auto m = ManifoldModel::from_spec(c.model);
  guard(r, "mass_zero_root", [&] {
    used("green_mass::mass_zero_root");
    used("green_mass::mass");
    const auto x = mass_zero_root(m);
    r.values["h_star"] = x.h_star;
    r.values["bracket"] = {x.lo, x.hi};
    r.values["evaluations"] = x.evaluations;
    r.add(relative("h_star", x.h_star, m.scal_x0() / 8, tol(c, 0.05)));
    r.add(at_most("mass_at_root", std::abs(x.mass_at_root), tol(c, 1e-4)));
  });
}

// ---------------------------------------------------------------------------

void acceptance_cmd(const ExperimentConfig& c, Report& r) {
  auto& t = r.table("criteria", {"id", "title", "checks", "failed", "pass"});
  for (const auto& k : acceptance(c.threads)) {
    int bad = 0;
    for (const auto& ch : k.checks) {
      auto copy = ch;
      copy.name = "c" + std::to_string(k.id) + "/" + ch.name;
      bad += ch.pass ? 0 : 1;
      r.add(std::move(copy));
    }
    t.rows.push_back({k.id, k.title, k.checks.size(), bad, k.pass()});
  }
}

ExperimentConfig sub(const std::string& command, int n, double s, const std::string& manifold = "sphere:1") {
  json j{{"command", command}, {"n", n}, {"s", s}, {"manifold", manifold}};
  return config_from_json(j);
}

// Runs `body` on `cfg` and moves its checks into `out`, prefixed with `prefix`.
void collect(std::vector<Check>& out, const std::string& prefix, const ExperimentConfig& cfg,
             const std::function<void(const ExperimentConfig&, Report&)>& body) {
  Report r;
  guard(r, "run", [&] { body(cfg, r); });
  for (auto& ch : r.checks) {
    ch.name = prefix + ch.name;
    out.push_back(std::move(ch));
  }
}

}  // namespace

bool Criterion::pass() const {
  if (checks.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::vector<Criterion> acceptance(int threads) {
  std::vector<Criterion> out;
  auto at = [](int n, double s) { return "n=" + std::to_string(n) + ",s=" + tag(s) + "/"; };

  {
    Criterion k{1, "constant algebra", {}};
    used("bubbles::cns");
    for (double s : {0.0, 0.5, 1.0, 1.5}) {
      k.checks.push_back(close("cns(4," + tag(s) + ")", cns({4, s}), 1.0 / 6.0, 0.0));
      k.checks.push_back(holds("cns_rational(4," + tag(s) + ")==1/6",
                               cns_rational(4, static_cast<std::int64_t>(2 * s), 2) == Rational{1, 6}));
    }
    k.checks.push_back(close("cns(3,0)", cns({3, 0.0}), 1.0 / 8.0, 0.0));
    k.checks.push_back(holds("cns_rational(3,0)==1/8", cns_rational(3, 0, 1) == Rational{1, 8}));
    k.checks.push_back(close("cns(5,1)", cns({5, 1.0}), 5.0 / 28.0, 1e-16));
    k.checks.push_back(holds("cns_rational(5,1)==5/28", cns_rational(5, 1, 1) == Rational{5, 28}));
    out.push_back(std::move(k));
  }
  {
    Criterion k{2, "bubble suite", {}};
    for (int n : {3, 4, 5, 6})
      for (double s : {0.0, 0.5, 1.0, 1.5}) collect(k.checks, at(n, s), sub("bubble-verify", n, s), bubble_verify);
    out.push_back(std::move(k));
  }
  {
    Criterion k{3, "weighted gradient ratio", {}};
    used("bubbles::rayleigh_ratio_identity");
    for (int n : {5, 6, 7})
      for (double s : {0.5, 1.0, 1.5}) {
        try {
          const auto q = rayleigh_ratio_identity({n, s});
          k.checks.push_back(relative(at(n, s) + "weighted_gradient_ratio", q.lhs, q.rhs, 1e-6));
          const double closed = n * (n - 2) * (n + 2 - s) / (2 * (2 * n - 2 - s));
          k.checks.push_back(relative(at(n, s) + "weighted_gradient_ratio_closed_form", q.rhs, closed, 1e-14));
        } catch (const Error& e) {
          k.checks.push_back(failed(at(n, s) + "weighted_gradient_ratio", e.what()));
        }
      }
    try {
      k.checks.push_back(relative("weighted_gradient_ratio(5,1)==45/7", rayleigh_ratio_identity({5, 1.0}).lhs, 45.0 / 7.0, 1e-6));
    } catch (const Error& e) {
      k.checks.push_back(failed("weighted_gradient_ratio(5,1)==45/7", e.what()));
    }
    out.push_back(std::move(k));
  }
  {
    Criterion k{4, "sphere moments", {}};
    collect(k.checks, "", sub("sphere-moments", 4, 1.0), sphere_moments);
    out.push_back(std::move(k));
  }
  {
    Criterion k{5, "curvature identities", {}};
    collect(k.checks, "S3/", sub("curvature", 3, 1.0, "sphere:1"), curvature);
    collect(k.checks, "S4/", sub("curvature", 4, 1.0, "sphere:1"), curvature);
    collect(k.checks, "T4/", sub("curvature", 4, 1.0, "torus"), curvature);
    auto pert = sub("curvature", 4, 1.0, "perturbed:0.3");
    pert.model.delta = 0.8;
    collect(k.checks, "perturbed/", pert, curvature);
    out.push_back(std::move(k));
  }
  {
    Criterion k{6, "flat Pohozaev", {}};
    for (auto [n, s] : {std::pair{3, 1.0}, {4, 1.0}, {5, 0.5}})
      for (double d : {0.5, 1.0, 2.0}) {
        auto cfg = sub("pohozaev", n, s, "torus");
        cfg.delta = d;
        cfg.model.delta = d;
        collect(k.checks, at(n, s) + "delta=" + tag(d) + "/", cfg, pohozaev);
      }
    out.push_back(std::move(k));
  }
  {
    Criterion k{7, "C slopes", {}};
    for (int n : {5, 4}) {
      Report r;
      auto& t = fit_table(r);
      calpha_part(sub("pohozaev-asymptotics", n, 1.0, "torus"), r, t);
      for (auto& ch : r.checks) {
        ch.name = at(n, 1.0) + ch.name;
        k.checks.push_back(std::move(ch));
      }
    }
    out.push_back(std::move(k));
  }
  {
    Criterion k{8, "log-moment lemma", {}};
    Report r;
    auto& t = fit_table(r);
    log_moment_part(sub("pohozaev-asymptotics", 4, 1.0, "torus"), r, t);
    k.checks = std::move(r.checks);
    out.push_back(std::move(k));
  }
  {
    Criterion k{9, "threshold sweeps", {}};
    auto s4 = sub("sweep", 4, 1.0);
    s4.threads = threads;
    collect(k.checks, "S4/", s4, sweep);
    auto s5 = sub("sweep", 5, 0.5);
    s5.threads = threads;
    collect(k.checks, "S5/", s5, sweep);
    out.push_back(std::move(k));
  }
  {
    Criterion k{10, "D slopes", {}};
    auto cfg = sub("pohozaev-asymptotics", 5, 1.0);
    cfg.threads = threads;
    Report r;
    auto& t = fit_table(r);
    guard(r, "run", [&] { dalpha_part(cfg, r, t); });
    k.checks = std::move(r.checks);
    out.push_back(std::move(k));
  }
  {
    Criterion k{11, "mass suite", {}};
    auto cfg = sub("mass", 3, 0.0);
    cfg.threads = threads;
    collect(k.checks, "", cfg, mass_cmd);
    collect(k.checks, "", sub("mass-root", 3, 0.0), mass_root);
    out.push_back(std::move(k));
  }
  {
    Criterion k{12, "pointwise estimates", {}};
    auto cfg = sub("solve", 4, 1.0);
    cfg.a = 1.5;
    cfg.mu_ladder = {1e-1, 1e-2, 1e-3};
    collect(k.checks, "", cfg, solve);
    out.push_back(std::move(k));
  }
  return out;
}

const std::vector<Command>& commands() {
  static const std::vector<Command> list{
      {"constants", "2*(s), c_{n,s} against exact rational arithmetic, mu_s by quadrature and by closed form",
       "constants.csv: name,value", constants},
      {"bubble-verify", "normalization, K closure, gamma identity, d_n, scale invariance, PDE residual, weighted gradient ratio (n >= 5)",
       "profile.csv: r,u,du,d2u,pde_residual", bubble_verify},
      {"sphere-moments", "second and fourth sphere moments: closed form, product rule and seeded Monte Carlo",
       "moments.csv: exponents,exact,quadrature,monte_carlo,mc_stderr", sphere_moments},
      {"curvature", "normal-coordinate curvature sums, Christoffel symbols and the Cartan remainder ratio",
       "cartan.csv: t,residual", curvature},
      {"solve", "radial minimizer for --a; with --mu-ladder also the blow-up ladder and pointwise estimates",
       "profile.csv: theta,u; ladder.csv: mu,a,lambda,residual,morse_index,status,C_upper,C_lower,gradient_bound,"
       "green_discrepancy",
       solve},
      {"sweep", "threshold sweep over --a-grid (default: 41 points on [0.25, 1.25]·c_{n,s}Scal)",
       "sweep.csv: a,lambda,mu,argmax_theta,residual,gap,converged,status", sweep},
      {"pohozaev", "flat bubble terms, randomized calculus identity, curved non-radial identity",
       "terms.csv: case,B,B_error,C,D,D1,D2,D3,D4,volume,identity_residual", pohozaev},
      {"pohozaev-asymptotics", "C and D slopes (n >= 4), log moments (n = 4), O(delta mu) bound (n = 3)",
       "fits.csv: part,mu,ratio,slope,error,stable", pohozaev_asymptotics},
      {"mass", "n = 3 mass over h = --a or --a-grid (default 0.5..1.0)",
       "mass.csv: h,mass,error,primary,secondary,windows_agree,ode_residual,G_min", mass_cmd},
      {"mass-root", "h* with vanishing mass (n = 3)", "none", mass_root},
      {"acceptance", "the twelve acceptance criteria", "criteria.csv: id,title,checks,failed,pass", acceptance_cmd},
  };
  return list;
}

Report run(const ExperimentConfig& cfg) {
  used("cli::run");
  const auto& list = commands();
  const auto it = std::find_if(list.begin(), list.end(), [&](const Command& c) { return c.name == cfg.command; });
  if (it == list.end()) throw ConfigError("$.command", "unknown command '" + cfg.command + "'");
  Report r;
  r.command = cfg.command;
  r.config = to_json(cfg);
  r.config.erase("out");
  const auto t0 = std::chrono::steady_clock::now();
  guard(r, cfg.command, [&] { it->body(cfg, r); });
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (r.checks.empty()) r.add(failed(cfg.command, "no checks were produced"));
  return r;
}

std::set<std::string> operations_used() {
  std::lock_guard lock(g_ops_mutex);
  return g_ops;
}

void reset_operations() {
  std::lock_guard lock(g_ops_mutex);
  g_ops.clear();
}

}  // namespace hslab::runner
