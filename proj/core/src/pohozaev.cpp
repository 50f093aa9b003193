#include "hslab/pohozaev.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "hslab/error.hpp"
#include "parallel.hpp"

namespace hslab {

Field radial_field(int n, std::function<double(double)> u, std::function<double(double)> du,
                   std::function<double(double)> d2u) {
  return [n, u = std::move(u), du = std::move(du), d2u = std::move(d2u)](std::span<const double> X) {
    double r2 = 0;
    for (double x : X) r2 += x * x;
    const double r = std::sqrt(r2);
    FieldSample f;
    f.grad = Point::Zero(n);
    if (r == 0.0) {
      f.u = u(0.0);
      f.hess = d2u(0.0) * Metric::Identity(n, n);
      return f;
    }
    f.u = u(r);
    const double d1 = du(r), d2 = d2u(r);
    Point sg(n);
    for (int i = 0; i < n; ++i) sg(i) = X[i] / r;
    f.grad = d1 * sg;
    f.hess = (d1 / r) * Metric::Identity(n, n) + (d2 - d1 / r) * (sg * sg.transpose());
    return f;
  };
}

Field bubble_field(const Bubble& b) {
  const int n = b.params().n;
  const Field centered = radial_field(
      n, [b](double r) { return b.profile(r); }, [b](double r) { return b.dprofile(r); },
      [b](double r) { return b.d2profile(r); });
  const auto x0 = b.center();
  if (x0.empty()) return centered;
  return [centered, x0](std::span<const double> X) {
    std::array<double, kMaxDim> Y{};
    for (std::size_t i = 0; i < X.size(); ++i) Y[i] = X[i] - x0[i];
    return centered(std::span<const double>(Y.data(), X.size()));
  };
}

Field profile_field(int n, RadialProfile profile) {
  return radial_field(
      n, [profile](double r) { return profile.value(r); }, [profile](double r) { return profile.d1(r); },
      [profile](double r) { return profile.d2(r); });
}

namespace {

// Angular sums at one radius, in the order of Slot. The volume integrand is split
// into its Laplacian, potential and nonlinear parts; for exact solutions they cancel
// and the sum alone would be roundoff that the rule cannot converge on.
enum Slot { kC, kD1, kD2, kD3, kD4, kVlap, kVpot, kVnl, kSlots };
using Sums = std::array<double, kSlots>;

struct Integrands {
  const PohozaevInput& in;
  const PohozaevOptions& opts;
  SphereRule rule;
  int n;
  double p;

  bool isotropic;

  Integrands(const PohozaevInput& input, const PohozaevOptions& o)
      : in(input), opts(o), rule(SphereRule::for_degree(input.params.n, o.angular_degree)), n(input.params.n),
        p(input.params.two_star()),
        isotropic(input.radial && (input.metric.kind() == ManifoldKind::Sphere ||
                                   input.metric.kind() == ManifoldKind::Torus)) {}

  Christoffel gamma(std::span<const double> X) const {
    switch (in.metric.kind()) {
      case ManifoldKind::Torus: return Christoffel(n);
      case ManifoldKind::Sphere: return sphere_christoffel_exact(n, in.metric.radius(), X);
      default: return christoffel(in.metric, X, opts.christoffel_step);
    }
  }

  Sums at(double r) const {
    Sums acc{};
    const double a = in.a_hat(r);
    const bool flat = in.metric.kind() == ManifoldKind::Torus;
    std::array<double, kMaxDim> X{};
    const std::array<double, kMaxDim> pole{1.0};
    const std::size_t count = isotropic ? 1 : rule.size();
    for (std::size_t q = 0; q < count; ++q) {
      const auto sg = isotropic ? std::span<const double>(pole.data(), n) : rule.point(q);
      for (int i = 0; i < n; ++i) X[i] = r * sg[i];
      const std::span<const double> x(X.data(), n);
      const FieldSample f = in.u_hat(x);
      double xgrad = 0;
      for (int i = 0; i < n; ++i) xgrad += X[i] * f.grad(i);
      const double P = xgrad + 0.5 * (n - 2) * f.u;
      // T1 = (ĝ^{ij} − δ^{ij})∂_ij u, T2 = ĝ^{ij}Γ^k_ij ∂_k u.
      double T1 = 0, T2 = 0, trace = f.hess.trace();
      if (!flat) {
        const Metric gi = in.metric.inverse_metric(x);
        const Christoffel G = gamma(x);
        trace = 0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            trace += gi(i, j) * f.hess(i, j);
            double gk = 0;
            for (int k = 0; k < n; ++k) gk += G(k, i, j) * f.grad(k);
            T2 += gi(i, j) * gk;
          }
        T1 = trace - f.hess.trace();
      }
      const double lap = -trace + T2;  // Δ_ĝ u with Δ = −div∇
      const double w = isotropic ? sphere_area(n) : rule.weight(q);
      acc[kC] -= w * P * a * f.u;
      acc[kD1] += w * xgrad * T1;
      acc[kD2] += w * xgrad * T2;
      acc[kD3] += w * f.u * T1;
      acc[kD4] += w * f.u * T2;
      const double nonlin = in.lambda * std::pow(std::abs(f.u), p - 2) * f.u * std::pow(r, -in.params.s);
      acc[kVlap] += w * P * lap;
      acc[kVpot] += w * P * a * f.u;
      acc[kVnl] -= w * P * nonlin;
    }
    const double jac = std::pow(r, n - 1);
    for (double& v : acc) v *= jac;
    return acc;
  }
};

void validate(const PohozaevInput& in) {
  if (!in.u_hat) throw InvalidArgument("Pohozaev input has no field");
  if (in.metric.dim() != in.params.n) throw InvalidArgument("metric and problem dimensions differ");
  if (!(in.delta > 0) || in.delta >= in.metric.diameter()) throw InvalidArgument("delta must lie inside the chart");
  if (!(in.mu > 0)) throw InvalidArgument("mu must be positive");
}

class Volume {
 public:
  Volume(const PohozaevInput& in, const PohozaevOptions& opts)
      : in_(in),
        ig_(in, opts),
        budget_(opts.budget),
        quad_(RadialQuadrature::Options{opts.tolerance, std::numeric_limits<double>::infinity()}) {}

  Term term(Slot s) {
    const auto q = integrate(s);
    if (!std::isfinite(q.value) || q.error > budget_ * std::max(q.l1, std::numeric_limits<double>::min())) {
      static const char* names[] = {"C", "D1", "D2", "D3", "D4", "volume", "volume", "volume"};
      std::ostringstream os;
      os << "unresolved integrand in Pohozaev term " << names[s] << ": quadrature error " << q.error
         << " against L1 norm " << q.l1;
      throw ConvergenceError(os.str(), q.error);
    }
    return {q.value, q.error};
  }

 private:
  QuadratureResult integrate(Slot s) {
    return quad_.to_radius([&](double r) { return sums(r)[s]; }, in_.delta, std::min(in_.mu, in_.delta));
  }

  const Sums& sums(double r) {
    auto it = cache_.find(r);
    if (it == cache_.end()) it = cache_.emplace(r, ig_.at(r)).first;
    return it->second;
  }

  const PohozaevInput& in_;
  Integrands ig_;
  double budget_;
  RadialQuadrature quad_;
  std::map<double, Sums> cache_;
};

double boundary(const PohozaevInput& in, const SphereRule& rule) {
  const int n = in.params.n;
  const double p = in.params.two_star(), d = in.delta;
  std::array<double, kMaxDim> X{};
  double acc = 0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const auto sg = rule.point(q);
    for (int i = 0; i < n; ++i) X[i] = d * sg[i];
    const FieldSample f = in.u_hat(std::span<const double>(X.data(), n));
    double dnu = 0;
    for (int i = 0; i < n; ++i) dnu += sg[i] * f.grad(i);
    const double g2 = f.grad.squaredNorm();
    const double v = d * (0.5 * g2 - in.lambda / p * std::pow(std::abs(f.u), p) * std::pow(d, -in.params.s)) -
                     (d * dnu + 0.5 * (n - 2) * f.u) * dnu;
    acc += rule.weight(q) * v;
  }
  return acc * std::pow(d, n - 1);
}

}  // namespace

PohozaevReport pohozaev_terms(const PohozaevInput& in, const PohozaevOptions& opts) {
  validate(in);
  const int n = in.params.n;
  PohozaevReport r;
  const double b0 = boundary(in, SphereRule::for_degree(n, opts.angular_degree));
  const double b1 = boundary(in, SphereRule::for_degree(n, opts.angular_degree + 4));
  r.B = {b1, std::abs(b1 - b0)};

  Volume vol(in, opts);
  r.C = vol.term(kC);
  r.D1 = vol.term(kD1);
  r.D2 = vol.term(kD2);
  r.D3 = vol.term(kD3);
  r.D4 = vol.term(kD4);
  const double k = 0.5 * (n - 2);
  r.D.value = r.D1.value - r.D2.value + k * (r.D3.value - r.D4.value);
  r.D.error = r.D1.error + r.D2.error + k * (r.D3.error + r.D4.error);
  r.identity_residual = std::abs(r.C.value + r.D.value - r.B.value);
  r.combined_error = r.B.error + r.C.error + r.D.error;
  return r;
}

Term pohozaev_volume(const PohozaevInput& in, const PohozaevOptions& opts) {
  validate(in);
  Volume vol(in, opts);
  Term t;
  for (Slot s : {kVlap, kVpot, kVnl}) {
    const Term part = vol.term(s);
    t.value += part.value;
    t.error += part.error;
  }
  return t;
}

Term sphere_radial_D(const PohozaevInput& in, std::function<double(double)> u, std::function<double(double)> du,
                     const PohozaevOptions& opts) {
  validate(in);
  if (in.metric.kind() != ManifoldKind::Sphere) throw InvalidArgument("sphere_radial_D needs a round sphere");
  const int n = in.params.n;
  const double R = in.metric.radius(), om = sphere_area(n);
  auto f = [&](double r) {
    const double x = r / R;
    // cot x − 1/x, by series where the difference cancels.
    const double c = x < 1e-3 ? -x / 3 - x * x * x / 45 : std::cos(x) / std::sin(x) - 1 / x;
    const double d1 = du(r);
    return om * (r * d1 + 0.5 * (n - 2) * u(r)) * (n - 1) * (c / R) * d1 * std::pow(r, n - 1);
  };
  const RadialQuadrature quad(RadialQuadrature::Options{opts.tolerance, opts.budget});
  const auto q = quad.to_radius(f, in.delta, std::min(in.mu, in.delta));
  return {q.value, q.error};
}

LadderFit fit_ladder(const std::vector<double>& mu, const std::vector<double>& scaled, bool logarithmic) {
  if (mu.size() != scaled.size()) throw InvalidArgument("ladder and values differ in length");
  if (mu.size() < 3) throw InvalidArgument("ladder too short for a stable fit: need three rungs");
  std::vector<std::size_t> idx(mu.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return mu[a] > mu[b]; });
  LadderFit f;
  f.logarithmic = logarithmic;
  for (auto i : idx) {
    if (!(mu[i] > 0 && mu[i] < 1)) throw InvalidArgument("ladder scales must lie in (0, 1)");
    f.mu.push_back(mu[i]);
    f.ratio.push_back(logarithmic ? scaled[i] / std::log(1 / mu[i]) : scaled[i]);
  }
  const std::size_t m = f.mu.size();
  for (std::size_t i = 1; i < m; ++i)
    if (f.mu[i] == f.mu[i - 1]) throw InvalidArgument("ladder scales must be distinct");

  if (logarithmic) {
    // term/μ² = A ln(1/μ) + B + o(1): slopes of consecutive pairs.
    auto slope = [&](std::size_t i, std::size_t j) {
      const double li = std::log(1 / f.mu[i]), lj = std::log(1 / f.mu[j]);
      return (f.ratio[j] * lj - f.ratio[i] * li) / (lj - li);
    };
    f.slope = slope(m - 2, m - 1);
    f.error = std::abs(f.slope - slope(m - 3, m - 2));
  } else {
    const double y1 = f.ratio[m - 3], y2 = f.ratio[m - 2], y3 = f.ratio[m - 1];
    const double d1 = y2 - y1, d2 = y3 - y2;
    if (std::abs(d1) <= 1e-15 * std::abs(y3)) {
      f.slope = y3;
      f.error = std::abs(d2);
    } else {
      const double rho = d2 / d1;
      if (std::abs(rho) < 0.9) {
        f.slope = y3 + d2 * rho / (1 - rho);
        f.error = std::abs(f.slope - y3);
      } else {
        f.slope = y3;
        f.error = std::abs(d2);
        f.stable = false;
      }
    }
  }
  if (f.error > 0.1 * std::abs(f.slope) && std::abs(f.slope) > 1e-12) f.stable = false;
  return f;
}

double calpha_target(const ProblemParams& p, double a) {
  if (p.n == 4) return a * sphere_area(4) * std::pow(bubble_constants(p).K, 4);
  if (p.n >= 5) return a * bubble_l2_squared(p);
  throw InvalidArgument("C slope is defined for n >= 4");
}

double dalpha_target(const ProblemParams& p, double scal) {
  if (p.n == 4) return -scal / 6 * sphere_area(4) * std::pow(bubble_constants(p).K, 4);
  if (p.n >= 5) return -cns(p) * scal * bubble_l2_squared(p);
  throw InvalidArgument("D slope is defined for n >= 4");
}

std::vector<PohozaevInput> flat_bubble_ladder(const ProblemParams& p, double a, double delta,
                                              const std::vector<double>& mu_ladder) {
  const Bubble b = Bubble::canonical(p);
  std::vector<PohozaevInput> out;
  for (double mu : mu_ladder) {
    if (!(mu > 0)) throw InvalidArgument("ladder scales must be positive");
    PohozaevInput in;
    in.params = p;
    in.metric = ManifoldModel::torus(p.n, delta);
    in.u_hat = bubble_field(b.rescaled(mu));
    in.a_hat = RadialPotential(a);
    in.lambda = b.mu_s();
    in.delta = delta;
    in.mu = mu;
    in.radial = true;
    out.push_back(std::move(in));
  }
  return out;
}

namespace {
std::vector<PohozaevReport> evaluate(const std::vector<PohozaevInput>& ladder, int threads,
                                     const PohozaevOptions& opts) {
  std::vector<PohozaevReport> reps(ladder.size());
  detail::parallel_for(ladder.size(), threads, [&](std::size_t i) { reps[i] = pohozaev_terms(ladder[i], opts); });
  return reps;
}
}  // namespace

LadderFit calpha_asymptotic(const ProblemParams& p, double a, const std::vector<double>& mu_ladder, double delta,
                            int threads, const PohozaevOptions& opts) {
  if (p.n < 4) throw InvalidArgument("C slope is defined for n >= 4");
  const auto ladder = flat_bubble_ladder(p, a, delta, mu_ladder);
  const auto reps = evaluate(ladder, threads, opts);
  std::vector<double> scaled;
  for (std::size_t i = 0; i < reps.size(); ++i) scaled.push_back(reps[i].C.value / (mu_ladder[i] * mu_ladder[i]));
  return fit_ladder(mu_ladder, scaled, p.n == 4);
}

LadderFit log_moment_lemma(const ProblemParams& p, int i, int j, int b1, int b2, const std::vector<double>& mu_ladder,
                           double delta, const PohozaevOptions& opts) {
  if (p.n != 4) throw InvalidArgument("the log-moment lemma is stated for n = 4");
  for (int k : {i, j, b1, b2})
    if (k < 1 || k > p.n) throw InvalidArgument("indices must lie in 1..n");
  // ∂_iũ = ũ′σ_i, so the integrand splits into ∫σ^{b1}σ^{b2}σ^iσ^j dσ · ∫ r^{n+1}ũ′² dr.
  const Bubble b = Bubble::canonical(p);
  const auto rule = SphereRule::for_degree(p.n, std::max(opts.angular_degree, 4));
  const double ang =
      rule.integrate([&](std::span<const double> x) { return x[b1 - 1] * x[b2 - 1] * x[i - 1] * x[j - 1]; });
  const RadialQuadrature quad(RadialQuadrature::Options{opts.tolerance, opts.budget});
  std::vector<double> vals;
  for (double mu : mu_ladder) {
    if (!(mu > 0 && mu < 1)) throw InvalidArgument("ladder scales must lie in (0, 1)");
    auto f = [&](double r) {
      const double d1 = b.dprofile(r);
      return d1 * d1 * std::pow(r, p.n + 1);
    };
    vals.push_back(ang * quad.to_radius(f, delta / mu, 1.0).value);
  }
  return fit_ladder(mu_ladder, vals, true);
}

LadderFit dalpha_asymptotic(const std::vector<PohozaevInput>& ladder, int threads, const PohozaevOptions& opts) {
  if (ladder.empty()) throw InvalidArgument("empty ladder");
  const int n = ladder.front().params.n;
  if (n < 4) throw InvalidArgument("D slope is defined for n >= 4");
  const auto reps = evaluate(ladder, threads, opts);
  std::vector<double> mu, scaled;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    mu.push_back(ladder[i].mu);
    scaled.push_back(reps[i].D.value / (ladder[i].mu * ladder[i].mu));
  }
  return fit_ladder(mu, scaled, n == 4);
}

LadderFit dalpha_asymptotic(const ManifoldModel& m, const std::vector<RadialSolveResult>& ladder, double delta,
                            int threads, const PohozaevOptions& opts) {
  std::vector<PohozaevInput> inputs;
  for (const auto& r : ladder) {
    if (r.params.n != m.dim()) throw InvalidArgument("ladder dimension differs from the manifold");
    if (m.kind() == ManifoldKind::Sphere && std::abs(r.radius - m.radius()) > 1e-12 * m.radius())
      throw InvalidArgument("ladder radius differs from the manifold");
    PohozaevInput in;
    in.params = r.params;
    in.metric = m;
    const RadialPotential a(r.a_value);
    in.u_hat = profile_field(r.params.n, RadialProfile(r, a));
    in.a_hat = a;
    in.lambda = r.lambda;
    in.delta = delta;
    in.mu = r.mu;
    in.radial = true;
    inputs.push_back(std::move(in));
  }
  // Spline-backed fields are C² only; the DE error estimate cannot reach 1e−9 on them.
  PohozaevOptions o = opts;
  o.budget = std::max(o.budget, kProfileBudget);
  o.tolerance = std::max(o.tolerance, kProfileTolerance);
  return dalpha_asymptotic(inputs, threads, o);
}

double n3_bound_check(const std::vector<PohozaevInput>& ladder, const PohozaevOptions& opts) {
  double worst = 0;
  for (const auto& in : ladder) {
    if (in.params.n != 3) throw InvalidArgument("the O(delta mu) bound is an n = 3 statement");
    const auto r = pohozaev_terms(in, opts);
    worst = std::max(worst, std::abs(r.C.value + r.D.value) / (in.delta * in.mu));
  }
  return worst;
}

}  // namespace hslab
