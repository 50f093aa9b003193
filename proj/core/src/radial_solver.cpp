#include "hslab/radial_solver.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "hslab/error.hpp"
#include "hslab/green_mass.hpp"

namespace hslab {
namespace {

void gauss_legendre(int q, std::vector<double>& x, std::vector<double>& w) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(q, q);
  for (int k = 1; k < q; ++k) J(k, k - 1) = J(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  x.resize(q);
  w.resize(q);
  for (int i = 0; i < q; ++i) {
    x[i] = es.eigenvalues()(i);
    w[i] = 2.0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(const std::vector<double>& a) {
  double m = 0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

double blowup_scale(const ProblemParams& p, const std::vector<double>& u) {
  return std::pow(*std::max_element(u.begin(), u.end()), -2.0 / (p.n - 2));
}

Tridiag linearization(const RadialDiscretization& disc, const Tridiag& A, const std::vector<double>& u, double lambda) {
  const auto H = disc.constraint_hessian(u);
  Tridiag T = A;
  for (std::size_t i = 0; i < T.d.size(); ++i) T.d[i] -= lambda * H.d[i];
  for (std::size_t i = 0; i < T.o.size(); ++i) T.o[i] -= lambda * H.o[i];
  return T;
}

int morse_index(const RadialDiscretization& disc, const Tridiag& A, const std::vector<double>& u, double lambda) {
  const Tridiag T = linearization(disc, A, u, lambda);
  return T.negative_count(T, 0.0);
}

Tridiag add_scaled(Tridiag A, const Tridiag& M, double c) {
  for (std::size_t i = 0; i < A.d.size(); ++i) A.d[i] += c * M.d[i];
  for (std::size_t i = 0; i < A.o.size(); ++i) A.o[i] += c * M.o[i];
  return A;
}

}  // namespace

RadialPotential RadialPotential::shifted(double c) const {
  if (!fn_) return RadialPotential(constant_ + c);
  auto f = fn_;
  return RadialPotential(std::function<double(double)>([f, c](double r) { return f(r) + c; }));
}

// ---------------------------------------------------------------------------

std::vector<double> Tridiag::apply(const std::vector<double>& u) const {
  const std::size_t n = d.size();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = d[i] * u[i];
  for (std::size_t i = 0; i + 1 < n; ++i) {
    r[i] += o[i] * u[i + 1];
    r[i + 1] += o[i] * u[i];
  }
  return r;
}

std::vector<double> Tridiag::solve(const std::vector<double>& rhs) const {
  // Symmetric diagonal scaling first: the radial matrices are graded over many
  // decades between the pole and the equator.
  const std::size_t n = d.size();
  std::vector<double> sc(n);
  for (std::size_t i = 0; i < n; ++i) {
    double m = std::abs(d[i]);
    if (i > 0) m = std::max(m, std::abs(o[i - 1]));
    if (i + 1 < n) m = std::max(m, std::abs(o[i]));
    sc[i] = m > 0 ? 1.0 / std::sqrt(m) : 1.0;
  }
  std::vector<double> dd(n), du(n > 0 ? n - 1 : 0), du2(n, 0.0), x(n);
  for (std::size_t i = 0; i < n; ++i) {
    dd[i] = sc[i] * d[i] * sc[i];
    x[i] = sc[i] * rhs[i];
  }
  for (std::size_t i = 0; i + 1 < n; ++i) du[i] = sc[i] * o[i] * sc[i + 1];
  std::vector<double> dl(du);
  // LAPACK dgtsv-style elimination with row interchanges.
  if (n == 1) return {rhs[0] / d[0]};
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(dd[i]) >= std::abs(dl[i])) {
      if (dd[i] == 0.0) throw Error("singular tridiagonal system");
      const double f = dl[i] / dd[i];
      dd[i + 1] -= f * du[i];
      x[i + 1] -= f * x[i];
      dl[i] = 0.0;
    } else {
      const double f = dd[i] / dl[i];
      dd[i] = dl[i];
      const double tmp = dd[i + 1];
      dd[i + 1] = du[i] - f * tmp;
      if (i + 2 < n) {
        du2[i] = du[i + 1];
        du[i + 1] = -f * du2[i];
      }
      du[i] = tmp;
      std::swap(x[i], x[i + 1]);
      x[i + 1] -= f * x[i];
    }
  }
  if (dd[n - 1] == 0.0) throw Error("singular tridiagonal system");
  x[n - 1] /= dd[n - 1];
  x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / dd[n - 2];
  for (std::size_t k = n - 2; k-- > 0;) x[k] = (x[k] - du[k] * x[k + 1] - du2[k] * x[k + 2]) / dd[k];
  for (std::size_t i = 0; i < n; ++i) x[i] *= sc[i];
  return x;
}

int Tridiag::negative_count(const Tridiag& M, double sigma) const {
  int neg = 0;
  double piv = d[0] - sigma * M.d[0];
  if (piv < 0) ++neg;
  for (std::size_t i = 1; i < d.size(); ++i) {
    const double off = o[i - 1] - sigma * M.o[i - 1];
    if (piv == 0.0) piv = 1e-300;
    piv = (d[i] - sigma * M.d[i]) - off * off / piv;
    if (piv < 0) ++neg;
  }
  return neg;
}

// ---------------------------------------------------------------------------

RadialDiscretization::RadialDiscretization(const ProblemParams& p, const ManifoldModel& m, const GridOptions& g)
    : p_(p), grid_(g), radius_(m.radius()) {
  if (!m.rotationally_symmetric()) throw InvalidArgument("radial solver needs a rotationally symmetric (sphere) model");
  if (m.dim() != p.n) throw InvalidArgument("manifold dimension differs from n");
  if (!(g.theta_min > 0 && g.theta_min < 1e-2)) throw InvalidArgument("theta_min must lie in (0, 1e-2)");
  if (!(g.log_step > 0 && g.log_step <= 0.2)) throw InvalidArgument("log_step must lie in (0, 0.2]");
  if (g.gauss_points < 2 || g.gauss_points > 10) throw InvalidArgument("gauss_points must lie in 2..10");

  const double R = radius_, L = std::log(std::numbers::pi / g.theta_min);
  const int N = static_cast<int>(std::ceil(L / g.log_step));
  for (int k = 0; k <= N; ++k) r_.push_back(R * g.theta_min * std::exp(L * k / N));
  r_.back() = std::numbers::pi * R;

  std::vector<double> gx, gw;
  gauss_legendre(g.gauss_points, gx, gw);
  const double omega = sphere_area(p.n);
  const std::size_t cells = r_.size() - 1;
  cellv_.assign(cells, 0.0);

  // Core [0, θ_0]: u is held at u_0 there. One point carries the exact weights
  // ω∫θ^{n−1}dθ and ω∫θ^{n−1−s}dθ (ρ = θ up to a relative θ_0²/R² correction).
  {
    const double t0 = r_[0];
    const double corr = 1.0 - (p.n - 1) * t0 * t0 / (6 * R * R);
    qr_.push_back(0.5 * t0);
    qc_.push_back(0);
    ql_.push_back(0.0);
    wv_.push_back(omega * std::pow(t0, p.n) / p.n * corr);
    ws_.push_back(omega * std::pow(t0, p.n - p.s) / (p.n - p.s) * corr);
  }
  for (std::size_t c = 0; c < cells; ++c) {
    const double a = r_[c], b = r_[c + 1];
    const double la = std::log(a), lb = std::log(b);
    for (int k = 0; k < g.gauss_points; ++k) {
      const double x = std::exp(la + 0.5 * (gx[k] + 1.0) * (lb - la));
      const double w = 0.5 * gw[k] * (lb - la) * x;
      const double wv = omega * std::pow(m.warp(x), p.n - 1) * w;
      qr_.push_back(x);
      qc_.push_back(static_cast<int>(c));
      ql_.push_back((x - a) / (b - a));
      wv_.push_back(wv);
      ws_.push_back(wv * std::pow(x, -p.s));
      cellv_[c] += wv;
    }
  }
}

std::vector<double> RadialDiscretization::interpolate(const std::vector<double>& u) const {
  std::vector<double> v(qr_.size());
  for (std::size_t q = 0; q < qr_.size(); ++q) v[q] = u[qc_[q]] * (1 - ql_[q]) + u[qc_[q] + 1] * ql_[q];
  return v;
}

Tridiag RadialDiscretization::weighted_mass(const std::vector<double>& f) const {
  Tridiag T{std::vector<double>(r_.size(), 0.0), std::vector<double>(r_.size() - 1, 0.0)};
  for (std::size_t q = 0; q < qr_.size(); ++q) {
    const int c = qc_[q];
    const double l = ql_[q], w = f[q] * wv_[q];
    T.d[c] += w * (1 - l) * (1 - l);
    T.d[c + 1] += w * l * l;
    T.o[c] += w * (1 - l) * l;
  }
  return T;
}

Tridiag RadialDiscretization::mass() const { return weighted_mass(std::vector<double>(qr_.size(), 1.0)); }

Tridiag RadialDiscretization::quadratic_form(const RadialPotential& a) const {
  std::vector<double> aq(qr_.size());
  for (std::size_t q = 0; q < qr_.size(); ++q) aq[q] = a(qr_[q]);
  Tridiag T = weighted_mass(aq);
  for (std::size_t c = 0; c + 1 < r_.size(); ++c) {
    const double h = r_[c + 1] - r_[c];
    const double k = cellv_[c] / (h * h);
    T.d[c] += k;
    T.d[c + 1] += k;
    T.o[c] -= k;
  }
  return T;
}

double RadialDiscretization::constraint(const std::vector<double>& u) const {
  const auto v = interpolate(u);
  const double ps = p_.two_star();
  double acc = 0;
  for (std::size_t q = 0; q < v.size(); ++q) acc += ws_[q] * std::pow(std::abs(v[q]), ps);
  return acc;
}

double RadialDiscretization::l2_squared(const std::vector<double>& u) const {
  const auto v = interpolate(u);
  double acc = 0;
  for (std::size_t q = 0; q < v.size(); ++q) acc += wv_[q] * v[q] * v[q];
  return acc;
}

std::vector<double> RadialDiscretization::constraint_gradient(const std::vector<double>& u) const {
  const auto v = interpolate(u);
  const double ps = p_.two_star();
  std::vector<double> b(r_.size(), 0.0);
  for (std::size_t q = 0; q < v.size(); ++q) {
    const double f = ws_[q] * std::pow(std::abs(v[q]), ps - 2.0) * v[q];
    b[qc_[q]] += f * (1 - ql_[q]);
    b[qc_[q] + 1] += f * ql_[q];
  }
  return b;
}

Tridiag RadialDiscretization::constraint_hessian(const std::vector<double>& u) const {
  const auto v = interpolate(u);
  const double ps = p_.two_star();
  std::vector<double> f(v.size());
  for (std::size_t q = 0; q < v.size(); ++q)
    f[q] = (ps - 1.0) * std::pow(std::abs(v[q]), ps - 2.0) * ws_[q] / wv_[q];
  return weighted_mass(f);
}

// ---------------------------------------------------------------------------

EnergyValue energy(const RadialDiscretization& disc, const RadialPotential& a, const std::vector<double>& u) {
  if (u.size() != disc.size()) throw InvalidArgument("profile size differs from the grid");
  const double c = disc.constraint(u);
  if (!(c > 0)) throw InvalidArgument("energy of a function with zero constraint value");
  const auto A = disc.quadratic_form(a);
  return {dot(u, A.apply(u)) / std::pow(c, 2.0 / disc.params().two_star()), c};
}

EnergyValue energy(const RadialProblem& problem, const std::vector<double>& u) {
  return energy(RadialDiscretization(problem.params, problem.manifold, problem.grid), problem.a, u);
}

double smallest_radial_eigenvalue(const RadialDiscretization& disc, const RadialPotential& a) {
  const auto A = disc.quadratic_form(a);
  const auto M = disc.mass();
  const auto& q = disc.quad_points();
  double lo = a(q[0]), hi = lo;
  for (double x : q) {
    lo = std::min(lo, a(x));
    hi = std::max(hi, a(x));
  }
  // K ≥ 0 gives λ₁ ≥ min a; the constant function gives λ₁ ≤ max a.
  lo -= 1e-9 * (1 + std::abs(lo));
  hi += 1e-9 * (1 + std::abs(hi));
  for (int it = 0; it < 200 && hi - lo > 1e-14 * (1 + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (A.negative_count(M, mid) >= 1 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------

RadialSolver::RadialSolver(RadialProblem problem, SolveOptions opts)
    : problem_(std::move(problem)), opts_(opts), disc_(problem_.params, problem_.manifold, problem_.grid) {}

std::vector<double> RadialSolver::initial_guess(double width) const {
  std::vector<double> u(disc_.size());
  const double R = disc_.radius();
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::exp(-disc_.nodes()[i] / (width * R));
  return u;
}

RadialSolveResult RadialSolver::minimize(const std::vector<double>* initial) const {
  const auto& p = problem_.params;
  const double ps = p.two_star();
  const auto& r = disc_.nodes();

  RadialSolveResult out;
  out.params = p;
  out.radius = disc_.radius();
  out.a_value = problem_.a(0.0);
  out.theta = r;

  const auto A = disc_.quadratic_form(problem_.a);
  out.smallest_eigenvalue = smallest_radial_eigenvalue(disc_, problem_.a);
  const double eig_scale = 1.0 + std::abs(problem_.a(0.0));
  if (out.smallest_eigenvalue < -opts_.coercivity_tolerance * eig_scale) {
    std::ostringstream os;
    os << "quadratic form is not coercive: smallest eigenvalue " << out.smallest_eigenvalue;
    throw NonCoerciveError(os.str(), out.smallest_eigenvalue);
  }
  double amin = problem_.a(disc_.quad_points()[0]);
  for (double x : disc_.quad_points()) amin = std::min(amin, problem_.a(x));
  const Tridiag P = amin > 0 ? A : disc_.quadratic_form(problem_.a.shifted(1.0 - amin));

  auto normalize = [&](std::vector<double>& v) {
    for (auto& x : v) x = std::abs(x);
    const double c = disc_.constraint(v);
    if (!(c > 0)) throw InvalidArgument("initial profile has zero constraint value");
    const double f = std::pow(c, -1.0 / ps);
    for (auto& x : v) x *= f;
  };
  const double floor_mu = opts_.concentration_floor * r[0];
  auto concentrated = [&](const std::vector<double>& v) { return blowup_scale(p, v) < floor_mu; };

  std::vector<double> u = initial ? *initial : initial_guess();
  if (u.size() != r.size()) throw InvalidArgument("initial profile size differs from the grid");
  normalize(u);

  const auto M = disc_.mass();
  // EL residuals are measured against max(‖Au‖∞, ‖Mu‖∞); the second term keeps
  // the scale meaningful when Au vanishes (a = 0, constant minimizer).
  auto scale = [&](const std::vector<double>& v, const std::vector<double>& Av) {
    return std::max(max_abs(Av), max_abs(M.apply(v)));
  };

  int iters = 0;
  double res = 1.0;
  double step = 1.0;
  enum class Phase { reached, concentrated, stagnated, budget };
  // Preconditioned gradient flow on the constraint manifold.
  auto gradient_phase = [&](double target, int budget) {
    double window_res = INFINITY, window_mu = blowup_scale(p, u);
    for (int it = 0; it < budget; ++it, ++iters) {
      const auto b = disc_.constraint_gradient(u);
      const auto Au = A.apply(u);
      const double Q = dot(u, Au);
      std::vector<double> g(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) g[i] = Au[i] - Q * b[i];
      res = max_abs(g) / scale(u, Au);
      if (res < target) return Phase::reached;
      if (concentrated(u)) return Phase::concentrated;
      if (it > 0 && it % opts_.stagnation_window == 0) {
        if (res > 0.5 * window_res) return Phase::stagnated;
        window_res = res;
        window_mu = blowup_scale(p, u);
      }
      const auto dir = P.solve(g);
      const double slope = dot(g, dir);
      double t = std::min(1.0, 2.0 * step);
      std::vector<double> v(u.size());
      for (;;) {
        for (std::size_t i = 0; i < u.size(); ++i) v[i] = u[i] - t * dir[i];
        normalize(v);
        const double J1 = dot(v, A.apply(v));
        if (J1 <= Q - 1e-4 * t * slope || t < 1e-12) break;
        t *= 0.5;
      }
      step = t;
      u.swap(v);
    }
    (void)window_mu;
    return Phase::budget;
  };

  struct State {
    std::vector<double> F1;
    double F2, lambda, merit, res;
  };
  auto state = [&](const std::vector<double>& v) {
    State s;
    const auto b = disc_.constraint_gradient(v);
    const auto Av = A.apply(v);
    s.lambda = dot(v, Av) / disc_.constraint(v);
    s.F1.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) s.F1[i] = Av[i] - s.lambda * b[i];
    s.F2 = disc_.constraint(v) - 1.0;
    s.res = max_abs(s.F1) / scale(v, Av);
    s.merit = s.res + std::abs(s.F2);
    return s;
  };

  // Bordered Newton on (Au − λb, N(u) − 1) with λ the Lagrange multiplier.
  // Steps are damped until the merit drops and u stays positive.
  auto newton_phase = [&] {
    for (int k = 0; k < opts_.max_newton_iterations; ++k, ++iters) {
      const State s = state(u);
      res = s.res;
      if (s.res < opts_.tolerance && std::abs(s.F2) < 1e-13) return true;
      const auto b = disc_.constraint_gradient(u);
      const Tridiag T = linearization(disc_, A, u, s.lambda);
      std::vector<double> mF1(s.F1.size());
      for (std::size_t i = 0; i < mF1.size(); ++i) mF1[i] = -s.F1[i];
      std::vector<double> x1, x2;
      try {
        x1 = T.solve(mF1);
        x2 = T.solve(b);
      } catch (const Error&) {
        return false;
      }
      const double dl = (-s.F2 - ps * dot(b, x1)) / (ps * dot(b, x2));
      bool accepted = false;
      std::vector<double> v(u.size());
      for (double damp = 1.0; damp > 1.0 / 512; damp *= 0.5) {
        bool positive = true;
        for (std::size_t i = 0; i < u.size(); ++i) {
          v[i] = u[i] + damp * (x1[i] + dl * x2[i]);
          positive = positive && v[i] > 0;
        }
        if (!positive) continue;
        if (state(v).merit < s.merit) {
          accepted = true;
          break;
        }
      }
      if (!accepted) return s.res <= opts_.accept_residual && std::abs(s.F2) < 1e-12;
      u.swap(v);
      if (concentrated(u)) return false;
    }
    return false;
  };

  std::string status = "max-iterations";
  double switch_tol = opts_.newton_switch;
  for (int round = 0; round < 3; ++round) {
    const std::vector<double> before = u;
    const Phase ph = gradient_phase(switch_tol, opts_.max_gradient_iterations);
    if (ph == Phase::concentrated) {
      status = "concentrated";
      break;
    }
    if (newton_phase()) {
      status = "converged";
      break;
    }
    if (concentrated(u)) {
      status = "concentrated";
      break;
    }
    if (ph == Phase::stagnated) {
      // No progress: the flow creeps along the dilation direction.
      status = blowup_scale(p, u) < 0.99 * blowup_scale(p, before) ? "concentrating" : "stagnated";
      break;
    }
    // Newton left its basin: tighten the hand-over and keep flowing.
    switch_tol *= 0.1;
  }

  // Report on the constraint set.
  normalize(u);
  const State s = state(u);
  out.u = u;
  out.lambda = dot(u, A.apply(u)) / std::pow(disc_.constraint(u), 2.0 / ps);
  out.constraint = disc_.constraint(u);
  out.residual = s.res;
  out.mu = blowup_scale(p, u);
  out.argmax_theta = r[std::max_element(u.begin(), u.end()) - u.begin()];
  out.morse_index = morse_index(disc_, A, u, out.lambda);
  out.iterations = iters;
  out.status = status;
  out.converged = status == "converged" && s.res <= opts_.accept_residual;
  return out;
}

RadialSolveResult minimize(const RadialProblem& problem, const SolveOptions& opts) {
  return RadialSolver(problem, opts).minimize();
}

// ---------------------------------------------------------------------------

std::optional<double> threshold_crossing(const std::vector<SweepRow>& rows, double eps) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].gap < eps) {
      if (i == 0) return std::nullopt;
      const auto& a = rows[i - 1];
      const auto& b = rows[i];
      return a.a + (a.gap - eps) / (a.gap - b.gap) * (b.a - a.a);
    }
  }
  return std::nullopt;
}

SweepResult sweep_threshold(const RadialProblem& problem, const std::vector<double>& a_grid, double eps_gap_rel,
                            int threads, const SolveOptions& opts) {
  if (a_grid.empty()) throw InvalidArgument("sweep grid is empty");
  for (std::size_t i = 1; i < a_grid.size(); ++i)
    if (!(a_grid[i] > a_grid[i - 1])) throw InvalidArgument("sweep grid must be strictly increasing");
  if (!problem.a.is_constant()) throw InvalidArgument("sweep needs a constant potential template");

  SweepResult out;
  out.mu_s = bubble_constants(problem.params).mu_s;
  out.eps_gap = eps_gap_rel;
  out.rows.resize(a_grid.size());

  // One discretization is shared read-only; every solve starts from the same guess.
  detail::parallel_for(a_grid.size(), threads, [&](std::size_t i) {
    RadialProblem pr = problem;
    pr.a = RadialPotential(a_grid[i]);
    SweepRow row{a_grid[i], NAN, NAN, NAN, NAN, NAN, false, "error"};
    try {
      const auto r = RadialSolver(pr, opts).minimize();
      row = {a_grid[i], r.lambda, r.mu, r.argmax_theta, r.residual, (out.mu_s - r.lambda) / out.mu_s, r.converged,
             r.status};
    } catch (const Error& e) {
      row.status = std::string("error: ") + e.what();
    }
    out.rows[i] = row;
  });

  // Unconverged rows only bound λ_a from above, so monotonicity is judged on converged rows.
  const SweepRow* prev = nullptr;
  for (const auto& row : out.rows) {
    if (!row.converged) continue;
    if (prev && !(row.lambda >= prev->lambda - opts.monotone_tolerance * std::abs(prev->lambda))) out.monotone = false;
    prev = &row;
  }
  out.a_star = threshold_crossing(out.rows, eps_gap_rel);
  out.a_star_loose = threshold_crossing(out.rows, eps_gap_rel * std::sqrt(10.0));
  out.a_star_tight = threshold_crossing(out.rows, eps_gap_rel / std::sqrt(10.0));
  if (out.a_star) {
    out.status = "ok";
  } else if (out.rows.front().gap < eps_gap_rel) {
    out.status = "all-above";
  } else {
    out.status = "all-below";
  }
  return out;
}

std::vector<RadialSolveResult> blowup_ladder(const RadialProblem& start, const std::vector<double>& targets,
                                             const SolveOptions& opts, double log_mu_step) {
  if (targets.empty()) throw InvalidArgument("empty mu ladder");
  for (std::size_t i = 1; i < targets.size(); ++i)
    if (!(targets[i] < targets[i - 1])) throw InvalidArgument("mu ladder must be strictly decreasing");
  if (!(log_mu_step > 0)) throw InvalidArgument("ladder step must be positive");
  const RadialSolver solver(start, opts);
  RadialSolveResult cur = solver.minimize();
  if (!cur.converged) throw ConvergenceError("ladder start did not converge (" + cur.status + ")", cur.residual);
  if (!(cur.mu > targets.front()))
    throw InvalidArgument("ladder start already has mu below the first target; lower the starting a");

  std::vector<RadialSolveResult> out;
  for (double target : targets) {
    double step = log_mu_step;
    while (cur.mu > target * (1 + 1e-12)) {
      const double next = std::max(target, cur.mu * std::exp(-step));
      RadialSolveResult r = solver.solve_pinned(next, cur);
      if (r.status == "converged") {
        if (r.a_value < cur.a_value)
          throw InvalidArgument("ladder start lies where mu increases with a; start closer to the threshold");
        cur = std::move(r);
        step = std::min(log_mu_step, 1.5 * step);
      } else {
        step *= 0.5;
        if (step < 1e-4) throw ConvergenceError("ladder continuation stalled at mu = " + std::to_string(cur.mu), r.residual);
      }
    }
    out.push_back(cur);
  }
  return out;
}

RadialSolveResult RadialSolver::solve_pinned(double mu, const RadialSolveResult& from) const {
  const auto& p = problem_.params;
  const double ps = p.two_star();
  const auto& r = disc_.nodes();
  if (from.u.size() != r.size()) throw InvalidArgument("pinned solve: starting profile size differs from the grid");
  if (!(mu > 0)) throw InvalidArgument("pinned solve needs mu > 0");
  const double U = std::pow(mu, -0.5 * (p.n - 2));

  // Predictor: dilate the previous profile about the pole, u ↦ σ^{(n−2)/2}u(σθ).
  const double sigma = from.mu / mu;
  std::vector<double> u(r.size());
  {
    const double amp = std::pow(sigma, 0.5 * (p.n - 2));
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double x = std::clamp(r[i] * sigma, r.front(), r.back());
      auto it = std::upper_bound(r.begin(), r.end(), x);
      const std::size_t k = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - r.begin(), 1), r.size() - 1);
      const double w = std::log(x / r[k - 1]) / std::log(r[k] / r[k - 1]);
      u[i] = amp * (from.u[k - 1] * (1 - w) + from.u[k] * w);
    }
  }
  const Tridiag A0 = disc_.quadratic_form(problem_.a);
  const Tridiag M = disc_.mass();
  double lambda = from.lambda, c = from.a_shift;

  struct State {
    std::vector<double> F1;
    double F2, F3, res, merit;
  };
  auto state = [&](const std::vector<double>& v, double lam, double cc) {
    const Tridiag A = add_scaled(A0, M, cc);
    const auto Av = A.apply(v);
    const auto b = disc_.constraint_gradient(v);
    State st;
    st.F1.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) st.F1[i] = Av[i] - lam * b[i];
    st.F2 = disc_.constraint(v) - 1.0;
    st.F3 = (v[0] - U) / U;
    st.res = max_abs(st.F1) / std::max(max_abs(Av), max_abs(M.apply(v)));
    st.merit = st.res + std::abs(st.F2) + std::abs(st.F3);
    return st;
  };

  RadialSolveResult out;
  out.params = p;
  out.radius = disc_.radius();
  out.theta = r;
  out.status = "max-iterations";
  int it = 0;
  for (; it < opts_.max_newton_iterations; ++it) {
    const State st = state(u, lambda, c);
    if (st.res < opts_.tolerance && std::abs(st.F2) < 1e-13 && std::abs(st.F3) < 1e-13) {
      out.status = "converged";
      break;
    }
    const Tridiag A = add_scaled(A0, M, c);
    const auto b = disc_.constraint_gradient(u);
    const Tridiag T = linearization(disc_, A, u, lambda);
    const auto Mu = M.apply(u);
    std::vector<double> mF1(u.size()), mMu(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      mF1[i] = -st.F1[i];
      mMu[i] = -Mu[i];
    }
    std::vector<double> x1, x2, x3;
    try {
      x1 = T.solve(mF1);
      x2 = T.solve(b);
      x3 = T.solve(mMu);
    } catch (const Error&) {
      out.status = "singular";
      break;
    }
    // p b·δu = −F2 and δu_0 = −(u_0 − U), with δu = x1 + δλ x2 + δc x3.
    const double m11 = ps * dot(b, x2), m12 = ps * dot(b, x3), m21 = x2[0], m22 = x3[0];
    const double r1 = -st.F2 - ps * dot(b, x1), r2 = -(u[0] - U) - x1[0];
    const double det = m11 * m22 - m12 * m21;
    if (!(std::abs(det) > 0)) {
      out.status = "singular";
      break;
    }
    const double dl = (r1 * m22 - m12 * r2) / det, dc = (m11 * r2 - m21 * r1) / det;
    bool accepted = false;
    std::vector<double> v(u.size());
    for (double damp = 1.0; damp > 1.0 / 512; damp *= 0.5) {
      bool positive = true;
      for (std::size_t i = 0; i < u.size(); ++i) {
        v[i] = u[i] + damp * (x1[i] + dl * x2[i] + dc * x3[i]);
        positive = positive && v[i] > 0;
      }
      if (!positive) continue;
      if (state(v, lambda + damp * dl, c + damp * dc).merit < st.merit) {
        u.swap(v);
        lambda += damp * dl;
        c += damp * dc;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // At the rounding floor the merit cannot drop further.
      const bool floor = st.res <= opts_.accept_residual && std::abs(st.F2) < 1e-12 && std::abs(st.F3) < 1e-12;
      out.status = floor ? "converged" : "stalled";
      break;
    }
  }
  const Tridiag A = add_scaled(A0, M, c);
  const State st = state(u, lambda, c);
  out.u = u;
  out.a_shift = c;
  out.a_value = problem_.a(0.0) + c;
  out.lambda = dot(u, A.apply(u)) / std::pow(disc_.constraint(u), 2.0 / ps);
  out.constraint = disc_.constraint(u);
  out.residual = st.res;
  out.mu = blowup_scale(p, u);
  out.argmax_theta = r[std::max_element(u.begin(), u.end()) - u.begin()];
  out.iterations = it;
  out.smallest_eigenvalue = NAN;
  out.morse_index = morse_index(disc_, A, u, out.lambda);
  if (out.status == "converged" && out.morse_index != 1) out.status = "saddle";
  out.converged = out.status == "converged" && st.res <= opts_.accept_residual;
  return out;
}

// ---------------------------------------------------------------------------

PointwiseBounds pointwise_bound_check(const ProblemParams& p, const std::vector<double>& theta,
                                      const std::vector<double>& u, double mu) {
  const double K = bubble_constants(p).K, t = 2.0 - p.s;
  const double Kt = std::pow(K, t), mut = std::pow(mu, t), scale = std::pow(mu, -0.5 * (p.n - 2));
  PointwiseBounds b{0.0, INFINITY};
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double e = u[i] * std::pow(mut + std::pow(theta[i], t) / Kt, (p.n - 2) / t) * scale;
    b.C_upper = std::max(b.C_upper, e);
    b.C_lower = std::min(b.C_lower, e);
  }
  return b;
}

PointwiseBounds pointwise_bound_check(const RadialSolveResult& r) {
  return pointwise_bound_check(r.params, r.theta, r.u, r.mu);
}

double gradient_bound_check(const ProblemParams& p, const std::vector<double>& theta, const std::vector<double>& du,
                            double mu, double R) {
  const double scale = std::pow(mu, -0.5 * (p.n - 2));
  double m = 0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (theta[i] < R * mu) continue;
    m = std::max(m, std::abs(du[i]) * std::pow(theta[i] * theta[i] + mu * mu, 0.5 * (p.n - 1)) * scale);
  }
  return m;
}

double gradient_bound_check(const RadialSolveResult& r, double R) {
  // Cell slopes of the P1 solution, located at cell midpoints.
  std::vector<double> mid, slope;
  for (std::size_t c = 0; c + 1 < r.theta.size(); ++c) {
    mid.push_back(0.5 * (r.theta[c] + r.theta[c + 1]));
    slope.push_back((r.u[c + 1] - r.u[c]) / (r.theta[c + 1] - r.theta[c]));
  }
  return gradient_bound_check(r.params, mid, slope, r.mu, R);
}

double green_profile_check(const RadialSolveResult& r, const GreenFunction& g, std::optional<double> d_n) {
  const double dn = d_n.value_or(bubble_constants(r.params).d_n);
  const double scale = std::pow(r.mu, -0.5 * (r.params.n - 2));
  const double top = std::numbers::pi * r.radius - 0.1;
  double worst = 0;
  for (std::size_t i = 0; i < r.theta.size(); ++i) {
    const double th = r.theta[i];
    if (th < 1.0 || th > top) continue;
    worst = std::max(worst, std::abs(scale * r.u[i] / (dn * g(th)) - 1.0));
  }
  return worst;
}

// ---------------------------------------------------------------------------

struct RadialProfile::Impl {
  ProblemParams p{3, 0.0};
  RadialPotential a;
  double lambda = 0, R = 1, t0 = 0, tmax = 0, th0 = 0, u0 = 0;
  boost::math::interpolators::cardinal_cubic_b_spline<double> spline;
};

RadialProfile::RadialProfile(const RadialSolveResult& r, RadialPotential a) {
  if (r.theta.size() < 4) throw InvalidArgument("profile needs at least four nodes");
  auto impl = std::make_shared<Impl>();
  impl->p = r.params;
  impl->a = std::move(a);
  impl->lambda = r.lambda;
  impl->R = r.radius;
  // Nodes are uniform in ln θ; du/dt vanishes at the antipode.
  const std::size_t M = r.theta.size();
  const double t0 = std::log(r.theta[0]), h = (std::log(r.theta[M - 1]) - t0) / static_cast<double>(M - 1);
  impl->spline = boost::math::interpolators::cardinal_cubic_b_spline<double>(
      r.u.begin(), r.u.end(), t0, h, std::numeric_limits<double>::quiet_NaN(), 0.0);
  impl->t0 = t0;
  impl->tmax = std::log(r.theta[M - 1]);
  impl->th0 = r.theta[0];
  impl->u0 = r.u[0];
  theta_max_ = r.theta[M - 1];
  impl_ = impl;
}

double RadialProfile::value(double th) const {
  const auto& m = *impl_;
  if (th <= m.th0) return m.u0;
  return m.spline(std::min(std::log(th), m.tmax));
}

double RadialProfile::d1(double th) const {
  const auto& m = *impl_;
  if (th <= m.th0) {
    // Leading behaviour u(0) − cθ^{2−s} inside the core.
    const double at0 = m.spline.prime(m.t0) / m.th0;
    return at0 * std::pow(th / m.th0, 1.0 - m.p.s);
  }
  return m.spline.prime(std::min(std::log(th), m.tmax)) / th;
}

double RadialProfile::d2(double th) const {
  const auto& m = *impl_;
  const double cot = std::cos(th / m.R) / (m.R * std::sin(th / m.R));
  const double u = value(th);
  return -(m.p.n - 1) * cot * d1(th) + m.a(th) * u - m.lambda * std::pow(u, m.p.two_star() - 1.0) / std::pow(th, m.p.s);
}

}  // namespace hslab
