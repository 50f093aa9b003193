#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hslab {

inline constexpr int kMaxDim = 8;
using Metric = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;

// ---------------------------------------------------------------------------
// Unit-sphere integration

/// Exact second moment ∫_{S^{n−1}} σ^m σ^k = δ^{mk} ω_{n−1}/n (1-based indices).
double sphere_moment2(int n, int m, int k);

/// Exact fourth moment ω_{n−1}(δ^{ij}δ^{ab} + δ^{ia}δ^{jb} + δ^{ib}δ^{ja})/(n(n+2)).
double sphere_moment4(int n, int i, int j, int a, int b);

/// Product rule on S^{n−1}: Gauss–Gegenbauer in each polar angle, equispaced
/// azimuth. Exact for polynomials of degree ≤ 2q−1.
class SphereRule {
 public:
  SphereRule(int n, int q);
  /// Smallest rule exact through `degree`.
  static SphereRule for_degree(int n, int degree);

  int dim() const { return n_; }
  std::size_t size() const { return weights_.size(); }
  std::span<const double> point(std::size_t i) const { return {points_.data() + i * n_, static_cast<std::size_t>(n_)}; }
  double weight(std::size_t i) const { return weights_[i]; }

  template <class F>
  double integrate(F&& f) const {
    double acc = 0;
    for (std::size_t i = 0; i < size(); ++i) acc += weights_[i] * f(point(i));
    return acc;
  }

 private:
  int n_;
  std::vector<double> points_;
  std::vector<double> weights_;
};

/// ∫_{S^{n−1}} Π σ^{e_i} with the product rule (exponents per coordinate).
double sphere_monomial_quadrature(int n, std::span<const int> exponents);

/// Monte-Carlo estimate of the same monomial integral with a fixed seed.
double sphere_monomial_monte_carlo(int n, std::span<const int> exponents, std::size_t samples, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Model metrics in normal coordinates at x₀

enum class ManifoldKind { Sphere, Torus, Custom };

std::string to_string(ManifoldKind k);

/// Serializable description of a model (the JSON model file maps onto this).
struct ManifoldSpec {
  ManifoldKind kind = ManifoldKind::Sphere;
  int n = 4;
  double radius = 1.0;
  double delta = 1.0;
  double cubic = 0.1;  // custom kind only
};

class ManifoldModel {
 public:
  using MetricFn = std::function<Metric(std::span<const double>)>;

  /// Round sphere of radius R; closed-form normal-coordinate metric.
  static ManifoldModel sphere(int n, double radius, double delta);
  /// Flat torus with side 2π·radius.
  static ManifoldModel torus(int n, double delta, double radius = 1.0);
  /// Round sphere plus c(X·e₁)(|X|²δ − XXᵀ). The perturbation kills X, so the
  /// chart stays normal, Scal(x₀) is unchanged, and a genuine cubic term appears.
  static ManifoldModel perturbed_sphere(int n, double radius, double delta, double cubic);
  /// User metric; `scal_x0` is the caller's claim and is not re-derived here.
  static ManifoldModel custom(int n, MetricFn g, double scal_x0, double delta);
  static ManifoldModel from_spec(const ManifoldSpec& spec);

  int dim() const { return n_; }
  ManifoldKind kind() const { return kind_; }
  double radius() const { return radius_; }
  double delta() const { return delta_; }
  double scal_x0() const { return scal_; }
  double cubic() const { return cubic_; }
  ManifoldSpec spec() const;

  Metric metric(std::span<const double> X) const;
  Metric metric(const Point& X) const { return metric(std::span<const double>(X.data(), X.size())); }
  Metric inverse_metric(std::span<const double> X) const;

  /// Constant sectional curvature of the underlying model, when it has one.
  std::optional<double> sectional_curvature() const { return kappa_; }

  /// Rotational symmetry about x₀ with warping g = dr² + ρ(r)²g_{S^{n−1}}.
  bool rotationally_symmetric() const { return kind_ == ManifoldKind::Sphere; }
  double warp(double r) const;
  /// Largest geodesic distance from x₀ (πR on the sphere).
  double diameter() const;

 private:
  ManifoldModel() = default;

  int n_ = 0;
  ManifoldKind kind_ = ManifoldKind::Sphere;
  double radius_ = 1.0;
  double delta_ = 1.0;
  double scal_ = 0.0;
  double cubic_ = 0.0;
  std::optional<double> kappa_;
  MetricFn user_;
};

/// Γ^k_ij, symmetric in (i,j).
class Christoffel {
 public:
  explicit Christoffel(int n) : n_(n), v_(static_cast<std::size_t>(n * n * n), 0.0) {}
  double& operator()(int k, int i, int j) { return v_[(k * n_ + i) * n_ + j]; }
  double operator()(int k, int i, int j) const { return v_[(k * n_ + i) * n_ + j]; }
  int dim() const { return n_; }
  double max_abs() const;

 private:
  int n_;
  std::vector<double> v_;
};

/// ∂_l g_ij(X) by 5-point central differences; returns n matrices.
std::vector<Metric> metric_gradient(const ManifoldModel& m, std::span<const double> X, double h);

/// Finite-difference Christoffel symbols of the model metric at X.
Christoffel christoffel(const ManifoldModel& m, std::span<const double> X, double h);

/// Closed-form Christoffel symbols of the round sphere (test and cross-check path).
Christoffel sphere_christoffel_exact(int n, double radius, std::span<const double> X);

struct CurvatureSummary {
  double sum_dij_gij = 0;  // Σ ∂_i∂_j g_ij(0)
  double sum_dbb_gii = 0;  // Σ ∂_β∂_β g_ii(0)
  double sum_dk_gamma = 0; // Σ ∂_kΓ^k_ii(0)
  double err_dij_gij = 0;
  double err_dbb_gii = 0;
  double err_dk_gamma = 0;
  double step = 0;
};

/// Richardson-extrapolated sums over steps h, h/2, h/4 (h defaults to δ/100).
CurvatureSummary curvature_identities(const ManifoldModel& m, std::optional<double> h = std::nullopt);

/// max |∂_k g_ij(0)|, the normal-coordinate gauge defect.
double gauge_defect(const ManifoldModel& m, std::optional<double> h = std::nullopt);

/// max_ij |g_ij(X) − δ_ij − (1/3)R_ipqj X^pX^q|.
double cartan_residual(const ManifoldModel& m, std::span<const double> X);

}  // namespace hslab
