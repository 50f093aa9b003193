#include "hslab/green_mass.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <boost/numeric/odeint.hpp>

#include "hslab/error.hpp"
#include "hslab/params.hpp"
#include "hslab/radial_solver.hpp"

namespace hslab {
namespace {

using Vec2 = std::array<double, 2>;
namespace odeint = boost::numeric::odeint;

// (G, F) with F = ω ρ^{n−1} G′, in t = ln θ.
struct GreenSystem {
  int n;
  double R, omega;
  const RadialPotential* h;
  void operator()(const Vec2& x, Vec2& dx, double t) const {
    const double th = std::exp(t);
    const double vol = omega * std::pow(R * std::sin(th / R), n - 1);
    dx[0] = th * x[1] / vol;
    dx[1] = th * vol * (*h)(th) * x[0];
  }
};

Vec2 integrate(const GreenSystem& sys, Vec2 x, double t0, double t1, double tol) {
  if (t0 == t1) return x;
  auto stepper = odeint::make_controlled(1e-30, tol, odeint::runge_kutta_dopri5<Vec2>());
  odeint::integrate_adaptive(stepper, sys, x, t0, t1, (t1 - t0) / 16);
  return x;
}

// Fixed-step order-8 hop, so nearby endpoints see the same truncation pattern.
Vec2 hop_fixed(const GreenSystem& sys, Vec2 x, double t0, double t1) {
  if (t0 == t1) return x;
  // Near the antipode the cot term varies on the scale of the distance φ to it.
  const double phi = std::numbers::pi * sys.R - std::exp(std::max(t0, t1));
  const double dth = std::abs(std::exp(t1) - std::exp(t0));
  const int steps = std::max({2, static_cast<int>(std::ceil(std::abs(t1 - t0) / 0.002)), static_cast<int>(std::ceil(dth / (0.05 * phi)))});
  odeint::runge_kutta_fehlberg78<Vec2> rk;
  odeint::integrate_n_steps(rk, sys, x, t0, (t1 - t0) / steps, steps);
  return x;
}

MassFit fit_window(const GreenFunction& G, double lo, double hi, int samples) {
  Eigen::VectorXd th(samples), beta(samples);
  for (int i = 0; i < samples; ++i) {
    th(i) = lo * std::pow(hi / lo, static_cast<double>(i) / (samples - 1));
    beta(i) = G(th(i)) - 1.0 / (4.0 * std::numbers::pi * th(i));
  }
  auto fit = [&](int degree, double& rms) {
    Eigen::MatrixXd V(samples, degree + 1);
    for (int i = 0; i < samples; ++i)
      for (int k = 0; k <= degree; ++k) V(i, k) = std::pow(th(i) / hi, k);
    const Eigen::VectorXd c = V.colPivHouseholderQr().solve(beta);
    rms = std::sqrt((V * c - beta).squaredNorm() / samples);
    return c(0);
  };
  MassFit f{lo, hi, 0, 0, 0};
  double rms3 = 0;
  f.mass = fit(2, f.rms);
  f.cubic = fit(3, rms3);
  return f;
}

}  // namespace

GreenFunction::State GreenFunction::series(double th) const {
  const double vol = omega_ * std::pow(R_ * std::sin(th / R_), n_ - 1);
  if (th <= theta_s_) {
    const double norm = 1.0 / ((n_ - 2) * omega_);
    const double S = norm * std::pow(th, 2 - n_) * (1 + s2_ * th * th);
    const double dS = norm * ((2 - n_) * std::pow(th, 1 - n_) + s2_ * (4 - n_) * std::pow(th, 3 - n_));
    const double Z = 1 + h0_ * th * th / (2 * n_), dZ = h0_ * th / n_;
    return {S + c_ * Z, vol * (dS + c_ * dZ)};
  }
  const double phi = std::numbers::pi * R_ - th;
  return {alpha_ * (1 + hpi_ * phi * phi / (2 * n_)), -alpha_ * vol * hpi_ * phi / n_};
}

GreenFunction::State GreenFunction::hop(std::size_t node, double th) const {
  const GreenSystem sys{n_, R_, omega_, &h_};
  const Vec2 x = hop_fixed(sys, {G_[node], F_[node]}, std::log(theta_[node]), std::log(th));
  return {x[0], x[1]};
}

namespace {
std::size_t nearest(const std::vector<double>& nodes, double th) {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), th);
  if (it == nodes.end()) return nodes.size() - 1;
  if (it == nodes.begin()) return 0;
  const std::size_t i = it - nodes.begin();
  return std::log(nodes[i] / th) < std::log(th / nodes[i - 1]) ? i : i - 1;
}
}  // namespace

double GreenFunction::operator()(double th) const {
  if (th <= theta_s_ || th >= std::numbers::pi * R_ - phi_s_) return series(th).G;
  return hop(nearest(theta_, th), th).G;
}

double GreenFunction::flux(double th) const {
  if (th <= theta_s_ || th >= std::numbers::pi * R_ - phi_s_) return series(th).F;
  return hop(nearest(theta_, th), th).F;
}

double GreenFunction::derivative(double th) const {
  return flux(th) / (omega_ * std::pow(R_ * std::sin(th / R_), n_ - 1));
}

double GreenFunction::singular_normalization() const { return std::pow(theta_[0], n_ - 2) * G_[0]; }

double GreenFunction::ode_residual(double th) const {
  // Step tracks θ near the pole; near the antipode G is smooth on the unit scale.
  const double e = std::min({3e-3 * th, 3e-3 * R_, (std::numbers::pi * R_ - th) / 3});
  const std::size_t k = nearest(theta_, th);
  double g[5];
  for (int j = -2; j <= 2; ++j) g[j + 2] = hop(k, th + j * e).G;
  const double d1 = (8 * (g[3] - g[1]) - (g[4] - g[0])) / (12 * e);
  const double d2 = (-g[4] + 16 * g[3] - 30 * g[2] + 16 * g[1] - g[0]) / (12 * e * e);
  const double cot = std::cos(th / R_) / (R_ * std::sin(th / R_));
  const double t1 = d2, t2 = (n_ - 1) * cot * d1, t3 = h_(th) * g[2];
  return std::abs(t1 + t2 - t3) / (std::abs(t1) + std::abs(t2) + std::abs(t3));
}

double GreenFunction::max_ode_residual(int samples) const {
  const double mid = 0.5 * std::numbers::pi * R_, lo = std::min(1e3 * theta_s_, 1e-2 * R_), top = 10 * phi_s_;
  double worst = 0;
  for (int i = 0; i < samples; ++i) {
    const double f = static_cast<double>(i) / (samples - 1);
    worst = std::max(worst, ode_residual(lo * std::pow(mid / lo, f)));
    worst = std::max(worst, ode_residual(std::numbers::pi * R_ - top * std::pow(mid / top, f)));
  }
  return worst;
}

double GreenFunction::delta_defect(const std::function<double(double)>& phi,
                                   const std::function<double(double)>& dphi) const {
  boost::math::quadrature::tanh_sinh<double> ts;
  auto f = [&](double th) {
    if (th <= 1e-100 * R_) return -dphi(th);
    if (th >= std::numbers::pi * R_) return 0.0;
    const double vol = omega_ * std::pow(R_ * std::sin(th / R_), n_ - 1);
    const State s = (th <= theta_s_ || th >= std::numbers::pi * R_ - phi_s_) ? series(th) : hop(nearest(theta_, th), th);
    return s.F * dphi(th) + vol * h_(th) * s.G * phi(th);
  };
  const double mid = 0.5 * std::numbers::pi * R_;
  const double I = ts.integrate(f, 0.0, mid, 1e-12) + ts.integrate(f, mid, std::numbers::pi * R_, 1e-12);
  return I - phi(0.0);
}

GreenFunction solve_green(const ManifoldModel& m, const RadialPotential& h, const GreenOptions& opts) {
  if (!m.rotationally_symmetric()) throw InvalidArgument("Green solver needs a rotationally symmetric (sphere) model");
  const int n = m.dim();
  const double R = m.radius(), pi = std::numbers::pi;
  {
    const RadialDiscretization disc(ProblemParams(n, 0.0), m, GridOptions{1e-6, 0.02, 4});
    const double eig = smallest_radial_eigenvalue(disc, h);
    if (!(eig > 1e-10)) {
      std::ostringstream os;
      os << "Δ_g + h is not coercive: smallest eigenvalue " << eig;
      throw NonCoerciveError(os.str(), eig);
    }
  }

  GreenFunction g;
  g.n_ = n;
  g.R_ = R;
  g.omega_ = sphere_area(n);
  g.tol_ = opts.tolerance;
  g.h_ = h;
  // For n >= 5 the regular part sits below roundoff of θ^{2−n} at tiny θ.
  g.theta_s_ = (n >= 5 ? std::max(opts.theta_start, std::pow(10.0, -9.0 / (n - 2))) : opts.theta_start) * R;
  g.phi_s_ = opts.antipode_start * R;
  g.h0_ = h(0.0);
  g.hpi_ = h(pi * R);
  g.s2_ = n == 4 ? 0.0 : (g.h0_ / 2 - (n - 2) * (n - 1) / (6 * R * R)) / (4 - n);

  const GreenSystem sys{n, R, g.omega_, &g.h_};
  const double thm = 0.5 * pi * R;

  // Pole side: singular seed S and regular Z (c = 0 gives S alone).
  std::vector<double> left;
  {
    const double L = std::log(thm / g.theta_s_);
    const int N = static_cast<int>(std::ceil(L / opts.log_step));
    for (int k = 0; k <= N; ++k) left.push_back(g.theta_s_ * std::exp(L * k / N));
    left.back() = thm;
  }
  std::vector<Vec2> S(left.size()), Z(left.size());
  {
    g.c_ = 0.0;
    const auto s0 = g.series(g.theta_s_);
    S[0] = {s0.G, s0.F};
    const double th = g.theta_s_;
    const double vol = g.omega_ * std::pow(R * std::sin(th / R), n - 1);
    Z[0] = {1 + g.h0_ * th * th / (2 * n), vol * g.h0_ * th / n};
    for (std::size_t k = 1; k < left.size(); ++k) {
      S[k] = integrate(sys, S[k - 1], std::log(left[k - 1]), std::log(left[k]), opts.tolerance);
      Z[k] = integrate(sys, Z[k - 1], std::log(left[k - 1]), std::log(left[k]), opts.tolerance);
    }
  }
  // Antipode side: regular Y with Y(πR) = 1.
  std::vector<double> right;  // decreasing θ from πR − φ_s to θ_m
  {
    const double L = std::log(thm / g.phi_s_);
    const int N = static_cast<int>(std::ceil(L / opts.log_step));
    for (int k = 0; k <= N; ++k) right.push_back(pi * R - g.phi_s_ * std::exp(L * k / N));
    right.back() = thm;
  }
  std::vector<Vec2> Y(right.size());
  {
    g.alpha_ = 1.0;
    const auto y0 = g.series(right[0]);
    Y[0] = {y0.G, y0.F};
    for (std::size_t k = 1; k < right.size(); ++k)
      Y[k] = integrate(sys, Y[k - 1], std::log(right[k - 1]), std::log(right[k]), opts.tolerance);
  }
  // S + cZ = αY at θ_m.
  const Vec2 &s = S.back(), &z = Z.back(), &y = Y.back();
  const double det = -z[0] * y[1] + y[0] * z[1];
  if (!(std::abs(det) > 0) || !std::isfinite(det)) throw ConvergenceError("Green shooting: degenerate matching", det);
  g.c_ = (-s[0] * -y[1] - (-y[0]) * -s[1]) / det;
  g.alpha_ = (z[0] * -s[1] - z[1] * -s[0]) / det;

  for (std::size_t k = 0; k < left.size(); ++k) {
    g.theta_.push_back(left[k]);
    g.G_.push_back(S[k][0] + g.c_ * Z[k][0]);
    g.F_.push_back(S[k][1] + g.c_ * Z[k][1]);
  }
  for (std::size_t k = right.size() - 1; k-- > 0;) {
    g.theta_.push_back(right[k]);
    g.G_.push_back(g.alpha_ * Y[k][0]);
    g.F_.push_back(g.alpha_ * Y[k][1]);
  }
  for (std::size_t k = 0; k < g.G_.size(); ++k) {
    if (!(g.G_[k] > 0) || !std::isfinite(g.G_[k])) {
      std::ostringstream os;
      os << "Green shooting produced a non-positive value at θ = " << g.theta_[k];
      throw ConvergenceError(os.str(), g.G_[k]);
    }
  }
  return g;
}

double conformal_sphere_green(int n, double R, double theta) {
  return std::pow(2 * R * std::sin(theta / (2 * R)), 2 - n) / ((n - 2) * sphere_area(n));
}

double eigen_series_green(int n, double R, double h, double theta, int terms) {
  if (n < 3) throw InvalidArgument("eigen series needs n >= 3");
  const double lam = 0.5 * (n - 1), x = std::cos(theta / R);
  const double vol = sphere_area(n + 1) * std::pow(R, n);
  const double hc = n * (n - 2) / (4 * R * R);
  double cm1 = 0, c = 1, acc = 0;
  for (int k = 0; k < terms; ++k) {
    const double ek = static_cast<double>(k) * (k + n - 1) / (R * R);
    acc += (k + lam) / lam * c * (1 / (ek + h) - 1 / (ek + hc));
    const double next = (2 * x * (k + lam) * c - (k + 2 * lam - 1) * cm1) / (k + 1);
    cm1 = c;
    c = next;
  }
  return conformal_sphere_green(n, R, theta) + acc / vol;
}

MassReport mass(const ManifoldModel& m, double h, const MassOptions& opts) {
  if (m.dim() != 3) throw InvalidArgument("mass is defined here for n = 3 only");
  if (opts.samples < 8) throw InvalidArgument("mass fit needs at least 8 samples");
  const double R = m.radius();
  const GreenFunction G = solve_green(m, RadialPotential(h), opts.green);
  MassReport r;
  r.h = h;
  r.primary = fit_window(G, opts.window_lo * R, opts.window_hi * R, opts.samples);
  r.secondary = fit_window(G, opts.check_lo * R, opts.check_hi * R, opts.samples);
  for (int i = 0; i < opts.samples; ++i) {
    const double th = opts.window_lo * R * std::pow(opts.window_hi / opts.window_lo, static_cast<double>(i) / (opts.samples - 1));
    r.theta.push_back(th);
    r.beta.push_back(G(th) - 1.0 / (4.0 * std::numbers::pi * th));
  }
  auto bar = [&](const MassFit& f) { return std::max({2 * std::abs(f.mass - f.cubic), f.rms, opts.error_floor}); };
  r.mass = r.primary.mass;
  r.error = bar(r.primary) + bar(r.secondary);
  r.windows_agree = std::abs(r.primary.mass - r.secondary.mass) <= r.error;
  return r;
}

MassSweep mass_sweep(const ManifoldModel& m, const std::vector<double>& hs, int threads, const MassOptions& opts) {
  if (hs.empty()) throw InvalidArgument("empty h grid");
  MassSweep out;
  out.reports.resize(hs.size());
  detail::parallel_for(hs.size(), threads, [&](std::size_t i) { out.reports[i] = mass(m, hs[i], opts); });
  for (std::size_t i = 1; i < hs.size(); ++i) {
    const bool up = hs[i] > hs[i - 1];
    const double dm = out.reports[i].mass - out.reports[i - 1].mass;
    if (up ? !(dm < 0) : !(dm > 0)) out.decreasing = false;
  }
  return out;
}

MassRoot mass_zero_root(const ManifoldModel& m, std::optional<double> lo, std::optional<double> hi,
                        const MassOptions& opts) {
  if (m.dim() != 3) throw InvalidArgument("mass root is defined here for n = 3 only");
  const auto kappa = m.sectional_curvature();
  if (!kappa && (!lo || !hi)) throw InvalidArgument("mass root needs an explicit bracket on this model");
  const double scal = kappa ? 6.0 * *kappa : 0.0;
  const double a = lo.value_or(scal / 60), b = hi.value_or(scal / 3);
  if (!(b > a)) throw InvalidArgument("mass root bracket must satisfy lo < hi");
  int evals = 0;
  auto f = [&](double h) {
    ++evals;
    return mass(m, h, opts).mass;
  };
  const double fa = f(a), fb = f(b);
  if (!(fa * fb < 0)) {
    std::ostringstream os;
    os << "no sign change of the mass on [" << a << ", " << b << "]: m = " << fa << ", " << fb;
    throw InvalidArgument(os.str());
  }
  std::uintmax_t iters = 80;
  const auto br = boost::math::tools::toms748_solve(f, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(44), iters);
  const double h = 0.5 * (br.first + br.second);
  const double mh = f(h);
  if (std::abs(mh) > 1e-4) throw ConvergenceError("mass root does not meet |m| <= 1e-4", std::abs(mh));
  return {h, mh, br.first, br.second, evals};
}

}  // namespace hslab
