#include "hslab/bubbles.hpp"

#include <cmath>
#include <string>

#include "hslab/error.hpp"

namespace hslab {
namespace {

// Unit-amplitude profile with c = 1: (1 + r^{2−s})^{−(n−2)/(2−s)} and its derivative.
struct UnitProfile {
  double t, q;
  explicit UnitProfile(const ProblemParams& p) : t(2.0 - p.s), q((p.n - 2) / (2.0 - p.s)) {}
  double value(double r) const { return std::pow(1.0 + std::pow(r, t), -q); }
  double deriv(double r) const {
    const double w = std::pow(r, t);
    return -q * t * std::pow(r, t - 1.0) * std::pow(1.0 + w, -q - 1.0);
  }
};

}  // namespace

double rayleigh_quotient(const ProblemParams& p, double c, const RadialQuadrature& q) {
  if (!(c > 0)) throw InvalidArgument("bubble scale must be positive");
  const UnitProfile U(p);
  const int n = p.n;
  const double s = p.s, ps = p.two_star();
  // U_c(r) = U(r/c); keep c explicit so the invariance is a genuine check.
  const auto grad = q.half_line(
      [&](double r) {
        const double d = U.deriv(r / c) / c;
        return std::pow(r, n - 1) * d * d;
      },
      c);
  const auto weighted = q.half_line(
      [&](double r) { return std::pow(r, n - 1 - s) * std::pow(U.value(r / c), ps); }, c);
  const double omega = sphere_area(n);
  return omega * grad.value / std::pow(omega * weighted.value, 2.0 / ps);
}

double best_constant_quadrature(const ProblemParams& p, const RadialQuadrature& q) {
  return rayleigh_quotient(p, 1.0, q);
}

BubbleConstants bubble_constants(const ProblemParams& p, const RadialQuadrature& q) {
  BubbleConstants k{};
  k.omega = sphere_area(p.n);
  k.mu_s = best_constant_quadrature(p, q);
  k.K = std::pow((p.n - 2) * (p.n - p.s) / k.mu_s, 1.0 / (2.0 - p.s));
  const UnitProfile U(p);
  const double K = k.K, ps = p.two_star();
  const auto I = q.half_line(
      [&](double r) { return std::pow(r, p.n - 1 - p.s) * std::pow(U.value(r / K), ps - 1.0); }, K);
  k.d_n = k.mu_s * k.omega * I.value;
  return k;
}

Bubble::Bubble(ProblemParams p, BubbleConstants k, double c0, double amp, std::vector<double> x0)
    : p_(p), k_(k), c0_(c0), amp_(amp), x0_(std::move(x0)) {
  if (!(c0_ > 0)) throw InvalidArgument("bubble scale c0 must be positive");
  if (x0_.empty()) x0_.assign(p_.n, 0.0);
  if (static_cast<int>(x0_.size()) != p_.n) throw InvalidArgument("bubble center has wrong dimension");
}

Bubble Bubble::canonical(const ProblemParams& p) {
  const auto k = bubble_constants(p);
  return Bubble(p, k, k.K, 1.0, {});
}

Bubble Bubble::normalized(const ProblemParams& p, double c0, std::vector<double> X0) {
  const auto k = bubble_constants(p);
  if (!(c0 > 0)) throw InvalidArgument("bubble scale c0 must be positive");
  return Bubble(p, k, c0, std::pow(k.K / c0, 0.5 * (p.n - 2)), std::move(X0));
}

Bubble Bubble::unit(const ProblemParams& p, double c0, std::vector<double> X0) {
  return Bubble(p, bubble_constants(p), c0, 1.0, std::move(X0));
}

Bubble Bubble::rescaled(double mu) const {
  if (!(mu > 0)) throw InvalidArgument("rescaling factor must be positive");
  return Bubble(p_, k_, c0_ * mu, amp_ * std::pow(mu, -0.5 * (p_.n - 2)), x0_);
}

double Bubble::operator()(std::span<const double> X) const {
  if (static_cast<int>(X.size()) != p_.n) throw InvalidArgument("point has wrong dimension");
  double r2 = 0;
  for (int i = 0; i < p_.n; ++i) r2 += (X[i] - x0_[i]) * (X[i] - x0_[i]);
  return profile(std::sqrt(r2));
}

double Bubble::profile(double r) const {
  const double t = 2.0 - p_.s, q = (p_.n - 2) / t;
  return amp_ * std::pow(1.0 + std::pow(r / c0_, t), -q);
}

double Bubble::dprofile(double r) const {
  const double t = 2.0 - p_.s, q = (p_.n - 2) / t;
  if (r == 0.0) return t > 1.0 ? 0.0 : (t == 1.0 ? -amp_ * q / c0_ : -INFINITY);
  const double x = r / c0_;
  return -amp_ * q * t * std::pow(x, t - 1.0) * std::pow(1.0 + std::pow(x, t), -q - 1.0) / c0_;
}

double Bubble::d2profile(double r) const {
  const double t = 2.0 - p_.s, q = (p_.n - 2) / t;
  const double x = r / c0_;
  const double w = std::pow(x, t);
  return -amp_ * q * t * std::pow(x, t - 2.0) * std::pow(1.0 + w, -q - 2.0) *
         ((t - 1.0) * (1.0 + w) - (q + 1.0) * t * w) / (c0_ * c0_);
}

double normalization_check(const Bubble& b, const RadialQuadrature& q) {
  const auto& p = b.params();
  const double ps = p.two_star();
  const auto I = q.half_line(
      [&](double r) { return std::pow(r, p.n - 1 - p.s) * std::pow(b.profile(r), ps); }, b.c0());
  return b.omega() * I.value;
}

double defk_closure(const ProblemParams& p, const RadialQuadrature& q) {
  const double omega = sphere_area(p.n);
  const UnitProfile U(p);
  const double ps = p.two_star();
  const auto I = q.half_line([&](double r) { return std::pow(r, p.n - 1 - p.s) * std::pow(U.value(r), ps); });
  // ∫ũ^{2*}/|X|^s = K^{n−s}·ω·I = 1 fixes K without reference to μ_s.
  const double K = std::pow(omega * I.value, -1.0 / (p.n - p.s));
  const double mu = best_constant_quadrature(p, q);
  return std::pow(K, 2.0 - p.s) * mu - (p.n - 2) * (p.n - p.s);
}

IdentitySides gamma_integral_identity(const ProblemParams& p, const RadialQuadrature& q) {
  const auto k = bubble_constants(p, q);
  const UnitProfile U(p);
  const double ps = p.two_star();
  const auto I = q.half_line(
      [&](double r) { return std::pow(r, p.n - 1 - p.s) * std::pow(U.value(r / k.K), ps - 1.0); }, k.K);
  return {k.omega * I.value, std::pow(k.K, p.n - p.s) * k.omega / (p.n - p.s)};
}

double bubble_l2_squared(const ProblemParams& p, const RadialQuadrature& q) {
  if (p.n <= 4) throw IntegrabilityError("∫ũ² diverges for n <= 4 (n = " + std::to_string(p.n) + ")");
  const auto k = bubble_constants(p, q);
  const UnitProfile U(p);
  const auto I = q.half_line(
      [&](double r) {
        const double u = U.value(r / k.K);
        return std::pow(r, p.n - 1) * u * u;
      },
      k.K);
  return k.omega * I.value;
}

IdentitySides rayleigh_ratio_identity(const ProblemParams& p, const RadialQuadrature& q) {
  if (p.n <= 4) throw IntegrabilityError("∫ũ² and ∫|X|²|∇ũ|² diverge for n <= 4 (n = " + std::to_string(p.n) + ")");
  const auto k = bubble_constants(p, q);
  const UnitProfile U(p);
  const double K = k.K;
  const auto num = q.half_line(
      [&](double r) {
        const double d = U.deriv(r / K) / K;
        return std::pow(r, p.n + 1) * d * d;
      },
      K);
  const auto den = q.half_line(
      [&](double r) {
        const double u = U.value(r / K);
        return std::pow(r, p.n - 1) * u * u;
      },
      K);
  const double n = p.n, s = p.s;
  return {num.value / den.value, n * (n - 2) * (n + 2 - s) / (2 * (2 * n - 2 - s))};
}

double pde_residual(const Bubble& b, double r) {
  if (!(r > 0)) throw InvalidArgument("pde_residual needs r > 0");
  const auto& p = b.params();
  const double lap = -b.d2profile(r) - (p.n - 1) * b.dprofile(r) / r;
  const double rhs = b.mu_s() * std::pow(b.profile(r), p.two_star() - 1.0) / std::pow(r, p.s);
  return std::abs(lap - rhs) / std::abs(rhs);
}

}  // namespace hslab
