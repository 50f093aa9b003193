#include "hslab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include "hslab/error.hpp"
#include "hslab/params.hpp"

namespace hslab {
namespace {

void check_index(int n, int i) {
  if (i < 1 || i > n) throw InvalidArgument("sphere moment index out of range 1..n");
}

int kd(int a, int b) { return a == b ? 1 : 0; }

// Golub–Welsch for the weight (1−t²)^λ on [−1,1].
void gauss_gegenbauer(int q, double lambda, std::vector<double>& t, std::vector<double>& w) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(q, q);
  for (int k = 1; k < q; ++k) {
    const double b = std::sqrt(k * (k + 2.0 * lambda) / ((2.0 * k + 2.0 * lambda + 1.0) * (2.0 * k + 2.0 * lambda - 1.0)));
    J(k, k - 1) = J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  const double mu0 = std::sqrt(std::numbers::pi) * boost::math::tgamma(lambda + 1.0) / boost::math::tgamma(lambda + 1.5);
  t.resize(q);
  w.resize(q);
  for (int i = 0; i < q; ++i) {
    t[i] = es.eigenvalues()(i);
    const double v = es.eigenvectors()(0, i);
    w[i] = mu0 * v * v;
  }
}

double sinc_ratio(double r, double R) {
  // R sin(r/R) / r
  if (r == 0.0) return 1.0;
  return R * std::sin(r / R) / r;
}

// 5-point first-derivative weights at offsets −2..2.
constexpr std::array<double, 5> kD1{1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
// 5-point second-derivative weights.
constexpr std::array<double, 5> kD2{-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};

template <class F>
double second_partial(F&& f, int n, int a, int b, double h) {
  Point X = Point::Zero(n);
  double acc = 0;
  if (a == b) {
    for (int i = 0; i < 5; ++i) {
      if (kD2[i] == 0.0) continue;
      X.setZero();
      X(a) = (i - 2) * h;
      acc += kD2[i] * f(X);
    }
  } else {
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        if (kD1[i] == 0.0 || kD1[j] == 0.0) continue;
        X.setZero();
        X(a) = (i - 2) * h;
        X(b) = (j - 2) * h;
        acc += kD1[i] * kD1[j] * f(X);
      }
  }
  return acc / (h * h);
}

struct Extrapolated {
  double value;
  double error;
};

// Richardson on an O(h⁴) difference quotient.
template <class D>
Extrapolated richardson(D&& d, double h, const char* what) {
  const double d0 = d(h), d1 = d(h / 2), d2 = d(h / 4);
  const double r1 = (16 * d1 - d0) / 15, r2 = (16 * d2 - d1) / 15;
  const Extrapolated e{r2, std::abs(r2 - r1)};
  if (!std::isfinite(e.value) || e.error > 1e-6 * std::max(1.0, std::abs(e.value))) {
    std::ostringstream os;
    os << "Richardson extrapolation of " << what << " did not settle: estimates " << r1 << ", " << r2;
    throw ConvergenceError(os.str(), e.error);
  }
  return e;
}

}  // namespace

// ---------------------------------------------------------------------------

double sphere_moment2(int n, int m, int k) {
  check_index(n, m);
  check_index(n, k);
  return m == k ? sphere_area(n) / n : 0.0;
}

double sphere_moment4(int n, int i, int j, int a, int b) {
  for (int x : {i, j, a, b}) check_index(n, x);
  const int pairings = kd(i, j) * kd(a, b) + kd(i, a) * kd(j, b) + kd(i, b) * kd(j, a);
  return sphere_area(n) * pairings / (n * (n + 2.0));
}

SphereRule::SphereRule(int n, int q) : n_(n) {
  if (n < 2 || n > kMaxDim) throw InvalidArgument("sphere rule needs 2 <= n <= 8");
  if (q < 1) throw InvalidArgument("sphere rule needs q >= 1");
  // Circle: 2q equispaced azimuths integrate trigonometric polynomials of degree < 2q.
  const int m = 2 * q;
  std::vector<double> pts, wts;
  for (int i = 0; i < m; ++i) {
    const double phi = 2 * std::numbers::pi * (i + 0.5) / m;
    pts.push_back(std::cos(phi));
    pts.push_back(std::sin(phi));
    wts.push_back(2 * std::numbers::pi / m);
  }
  // Lift S^{d−1} ⊂ ℝ^d to S^d: x = (t, √(1−t²)·y), dσ = (1−t²)^{(d−2)/2} dt dσ'.
  for (int d = 2; d < n; ++d) {
    std::vector<double> t, w;
    gauss_gegenbauer(q, 0.5 * (d - 2), t, w);
    std::vector<double> np, nw;
    for (int a = 0; a < q; ++a) {
      const double c = std::sqrt(std::max(0.0, 1 - t[a] * t[a]));
      for (std::size_t b = 0; b < wts.size(); ++b) {
        np.push_back(t[a]);
        for (int k = 0; k < d; ++k) np.push_back(c * pts[b * d + k]);
        nw.push_back(w[a] * wts[b]);
      }
    }
    pts.swap(np);
    wts.swap(nw);
  }
  points_ = std::move(pts);
  weights_ = std::move(wts);
}

SphereRule SphereRule::for_degree(int n, int degree) { return SphereRule(n, std::max(1, degree / 2 + 1)); }

double sphere_monomial_quadrature(int n, std::span<const int> e) {
  if (static_cast<int>(e.size()) != n) throw InvalidArgument("exponent vector must have n entries");
  int deg = 0;
  for (int x : e) deg += x;
  const auto rule = SphereRule::for_degree(n, deg);
  return rule.integrate([&](std::span<const double> x) {
    double v = 1;
    for (int i = 0; i < n; ++i) v *= std::pow(x[i], e[i]);
    return v;
  });
}

double sphere_monomial_monte_carlo(int n, std::span<const int> e, std::size_t samples, std::uint64_t seed) {
  if (static_cast<int>(e.size()) != n) throw InvalidArgument("exponent vector must have n entries");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<double> x(n);
  double acc = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    double r2 = 0;
    for (auto& xi : x) {
      xi = N(gen);
      r2 += xi * xi;
    }
    const double r = std::sqrt(r2);
    double v = 1;
    for (int i = 0; i < n; ++i) v *= std::pow(x[i] / r, e[i]);
    acc += v;
  }
  return sphere_area(n) * acc / static_cast<double>(samples);
}

// ---------------------------------------------------------------------------

std::string to_string(ManifoldKind k) {
  switch (k) {
    case ManifoldKind::Sphere: return "sphere";
    case ManifoldKind::Torus: return "torus";
    case ManifoldKind::Custom: return "custom";
  }
  return "unknown";
}

ManifoldModel ManifoldModel::sphere(int n, double radius, double delta) {
  if (n < 2 || n > kMaxDim) throw InvalidArgument("model dimension must lie in 2..8");
  if (!(radius > 0)) throw InvalidArgument("sphere radius must be positive");
  if (!(delta > 0 && delta < std::numbers::pi * radius))
    throw InvalidArgument("chart radius delta must lie in (0, pi*R)");
  ManifoldModel m;
  m.n_ = n;
  m.kind_ = ManifoldKind::Sphere;
  m.radius_ = radius;
  m.delta_ = delta;
  m.scal_ = n * (n - 1) / (radius * radius);
  m.kappa_ = 1.0 / (radius * radius);
  return m;
}

ManifoldModel ManifoldModel::torus(int n, double delta, double radius) {
  if (n < 2 || n > kMaxDim) throw InvalidArgument("model dimension must lie in 2..8");
  if (!(radius > 0)) throw InvalidArgument("torus scale must be positive");
  if (!(delta > 0 && delta < std::numbers::pi * radius))
    throw InvalidArgument("chart radius delta must lie in (0, pi*R) on the torus");
  ManifoldModel m;
  m.n_ = n;
  m.kind_ = ManifoldKind::Torus;
  m.radius_ = radius;
  m.delta_ = delta;
  m.scal_ = 0;
  m.kappa_ = 0.0;
  return m;
}

ManifoldModel ManifoldModel::perturbed_sphere(int n, double radius, double delta, double cubic) {
  ManifoldModel m = sphere(n, radius, delta);
  m.kind_ = ManifoldKind::Custom;
  m.cubic_ = cubic;
  // Tangential eigenvalue is R²sin²(r/R)/r² + c·X₁r² ≥ sinc² − |c|r³; keep it positive on the chart.
  for (int i = 1; i <= 200; ++i) {
    const double r = delta * i / 200.0;
    const double s = sinc_ratio(r, radius);
    if (s * s - std::abs(cubic) * r * r * r <= 0.05 * s * s)
      throw InvalidArgument("cubic perturbation too large: metric degenerates inside the chart");
  }
  return m;
}

ManifoldModel ManifoldModel::custom(int n, MetricFn g, double scal_x0, double delta) {
  if (n < 2 || n > kMaxDim) throw InvalidArgument("model dimension must lie in 2..8");
  if (!g) throw InvalidArgument("custom model needs a metric function");
  if (!(delta > 0)) throw InvalidArgument("chart radius must be positive");
  ManifoldModel m;
  m.n_ = n;
  m.kind_ = ManifoldKind::Custom;
  m.delta_ = delta;
  m.scal_ = scal_x0;
  m.user_ = std::move(g);
  return m;
}

ManifoldModel ManifoldModel::from_spec(const ManifoldSpec& s) {
  switch (s.kind) {
    case ManifoldKind::Sphere: return sphere(s.n, s.radius, s.delta);
    case ManifoldKind::Torus: return torus(s.n, s.delta, s.radius);
    case ManifoldKind::Custom: return perturbed_sphere(s.n, s.radius, s.delta, s.cubic);
  }
  throw InvalidArgument("unknown manifold kind");
}

ManifoldSpec ManifoldModel::spec() const {
  if (user_) throw InvalidArgument("a user-supplied metric has no serializable spec");
  return {kind_, n_, radius_, delta_, cubic_};
}

Metric ManifoldModel::metric(std::span<const double> X) const {
  if (static_cast<int>(X.size()) != n_) throw InvalidArgument("point has wrong dimension");
  if (user_) return user_(X);
  Metric g = Metric::Identity(n_, n_);
  if (kind_ == ManifoldKind::Torus) return g;
  double r2 = 0;
  for (double x : X) r2 += x * x;
  const double r = std::sqrt(r2);
  if (r == 0.0) return g;
  const double sr = sinc_ratio(r, radius_);
  const double f = sr * sr;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      const double oo = X[i] * X[j] / r2;
      g(i, j) = oo + f * ((i == j ? 1.0 : 0.0) - oo);
    }
  if (cubic_ != 0.0) {
    const double c = cubic_ * X[0];
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) g(i, j) += c * ((i == j ? r2 : 0.0) - X[i] * X[j]);
  }
  return g;
}

Metric ManifoldModel::inverse_metric(std::span<const double> X) const {
  const Metric g = metric(X);
  return g.llt().solve(Metric::Identity(n_, n_));
}

double ManifoldModel::warp(double r) const {
  if (kind_ != ManifoldKind::Sphere) throw InvalidArgument("warp() needs a rotationally symmetric model");
  return radius_ * std::sin(r / radius_);
}

double ManifoldModel::diameter() const {
  if (user_) return delta_;
  return std::numbers::pi * radius_;
}

double Christoffel::max_abs() const {
  double m = 0;
  for (double x : v_) m = std::max(m, std::abs(x));
  return m;
}

std::vector<Metric> metric_gradient(const ManifoldModel& m, std::span<const double> X, double h) {
  const int n = m.dim();
  if (static_cast<int>(X.size()) != n) throw InvalidArgument("point has wrong dimension");
  double r2 = 0;
  for (double x : X) r2 += x * x;
  if (!(h > 0) || h > 0.1 * m.delta() || std::sqrt(r2) + 2 * h > m.diameter())
    throw InvalidArgument("finite-difference step too large relative to the chart radius");
  std::vector<Metric> dg(n, Metric::Zero(n, n));
  Point Y(n);
  auto at = [&](int l, double off) {
    for (int i = 0; i < n; ++i) Y(i) = X[i];
    Y(l) += off;
    return m.metric(Y);
  };
  for (int l = 0; l < n; ++l) {
    // Paired differences: exactly zero on a constant metric.
    const Metric d1 = at(l, h) - at(l, -h);
    const Metric d2 = at(l, 2 * h) - at(l, -2 * h);
    dg[l] = (8.0 * d1 - d2) / (12.0 * h);
  }
  return dg;
}

namespace {
Christoffel assemble_christoffel(const Metric& ginv, const std::vector<Metric>& dg) {
  const int n = static_cast<int>(ginv.rows());
  Christoffel G(n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double acc = 0;
        for (int p = 0; p < n; ++p) acc += ginv(k, p) * (dg[i](j, p) + dg[j](i, p) - dg[p](i, j));
        G(k, i, j) = G(k, j, i) = 0.5 * acc;
      }
  return G;
}
}  // namespace

Christoffel christoffel(const ManifoldModel& m, std::span<const double> X, double h) {
  const auto dg = metric_gradient(m, X, h);
  return assemble_christoffel(m.inverse_metric(X), dg);
}

Christoffel sphere_christoffel_exact(int n, double R, std::span<const double> X) {
  double r2 = 0;
  for (double x : X) r2 += x * x;
  const double r = std::sqrt(r2);
  if (r == 0.0) return Christoffel(n);
  const double sn = std::sin(r / R), cs = std::cos(r / R);
  const double f = R * R * sn * sn / r2;
  const double fp = 2 * R * sn * cs / r2 - 2 * R * R * sn * sn / (r2 * r);
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = X[i] / r;
  std::vector<Metric> dg(n, Metric::Zero(n, n));
  Metric ginv(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      ginv(i, j) = w[i] * w[j] + ((i == j) - w[i] * w[j]) / f;
      for (int l = 0; l < n; ++l)
        dg[l](i, j) = fp * w[l] * ((i == j) - w[i] * w[j]) +
                      (1 - f) * ((i == l) * w[j] + (j == l) * w[i] - 2 * w[i] * w[j] * w[l]) / r;
    }
  return assemble_christoffel(ginv, dg);
}

CurvatureSummary curvature_identities(const ManifoldModel& m, std::optional<double> step) {
  const int n = m.dim();
  const double h = step.value_or(m.delta() * 1e-2);
  if (!(h > 0) || 2 * h > 0.1 * m.delta()) throw InvalidArgument("curvature step too large relative to the chart radius");
  CurvatureSummary out;
  out.step = h;

  auto dij = [&](double hh) {
    double acc = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        acc += second_partial([&](const Point& X) { return m.metric(X)(i, j); }, n, i, j, hh);
    return acc;
  };
  auto dbb = [&](double hh) {
    double acc = 0;
    for (int b = 0; b < n; ++b)
      acc += second_partial([&](const Point& X) { return m.metric(X).trace(); }, n, b, b, hh);
    return acc;
  };
  auto dgamma = [&](double hh) {
    double acc = 0;
    Point X(n);
    for (int k = 0; k < n; ++k)
      for (int o = 0; o < 5; ++o) {
        if (kD1[o] == 0.0) continue;
        X.setZero();
        X(k) = (o - 2) * hh;
        const auto G = christoffel(m, std::span<const double>(X.data(), n), hh / 4);
        double tr = 0;
        for (int i = 0; i < n; ++i) tr += G(k, i, i);
        acc += kD1[o] * tr;
      }
    return acc / hh;
  };

  const auto a = richardson(dij, h, "sum d_ij g_ij");
  const auto b = richardson(dbb, h, "sum d_bb g_ii");
  const auto c = richardson(dgamma, h, "sum d_k Gamma^k_ii");
  out.sum_dij_gij = a.value;
  out.err_dij_gij = a.error;
  out.sum_dbb_gii = b.value;
  out.err_dbb_gii = b.error;
  out.sum_dk_gamma = c.value;
  out.err_dk_gamma = c.error;
  return out;
}

double gauge_defect(const ManifoldModel& m, std::optional<double> step) {
  const int n = m.dim();
  const std::vector<double> zero(n, 0.0);
  const auto dg = metric_gradient(m, zero, step.value_or(m.delta() * 1e-2));
  double worst = 0;
  for (const auto& d : dg) worst = std::max(worst, d.cwiseAbs().maxCoeff());
  return worst;
}

double cartan_residual(const ManifoldModel& m, std::span<const double> X) {
  const int n = m.dim();
  if (static_cast<int>(X.size()) != n) throw InvalidArgument("point has wrong dimension");
  double r2 = 0;
  for (double x : X) r2 += x * x;
  if (r2 == 0.0) return 0.0;
  const Metric g = m.metric(X);
  Metric quad(n, n);
  if (auto kappa = m.sectional_curvature()) {
    // (1/3)R_ipqj X^pX^q with R_ipqj = κ(δ_iq δ_pj − δ_ij δ_pq).
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) quad(i, j) = (*kappa / 3.0) * (X[i] * X[j] - (i == j) * r2);
  } else {
    // Quadratic Taylor term ½∂_p∂_q g_ij(0) X^pX^q from finite differences.
    const double h = m.delta() * 1e-2;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double acc = 0;
        for (int p = 0; p < n; ++p)
          for (int q = 0; q < n; ++q)
            acc += X[p] * X[q] * second_partial([&](const Point& Y) { return m.metric(Y)(i, j); }, n, p, q, h);
        quad(i, j) = 0.5 * acc;
      }
  }
  double worst = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(g(i, j) - (i == j) - quad(i, j)));
  return worst;
}

}  // namespace hslab
