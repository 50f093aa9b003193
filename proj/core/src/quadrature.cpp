#include "hslab/quadrature.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "hslab/error.hpp"

namespace hslab {
namespace {

// The rules synchronize their lazily built abscissa tables internally.
boost::math::quadrature::exp_sinh<double>& exp_rule() {
  static boost::math::quadrature::exp_sinh<double> rule(12);
  return rule;
}

boost::math::quadrature::tanh_sinh<double>& tanh_rule() {
  static boost::math::quadrature::tanh_sinh<double> rule(12);
  return rule;
}

// Far tails: r^k·(decaying profile) can overflow to inf·0 although the
// product underflows; the integrand has decayed there by assumption.
double guarded(const RadialQuadrature::Fn& f, double r) {
  const double v = f(r) * r;
  if (std::isfinite(v)) return v;
  if (r > 1e30 || r < 1e-30) return 0.0;
  return v;
}

QuadratureResult operator+(const QuadratureResult& a, const QuadratureResult& b) {
  return {a.value + b.value, a.error + b.error, a.l1 + b.l1};
}

}  // namespace

// ∫_0^b f(r) dr with r = b·e^{−τ}, τ ∈ [0,∞).
QuadratureResult RadialQuadrature::head(const Fn& f, double b) const {
  auto g = [&](double tau) {
    const double r = b * std::exp(-tau);
    if (r == 0.0) return 0.0;
    return guarded(f, r);
  };
  QuadratureResult out;
  out.value = exp_rule().integrate(g, 0.0, std::numeric_limits<double>::infinity(), opts_.tolerance, &out.error, &out.l1);
  return out;
}

// ∫_a^∞ f(r) dr with r = a·e^{τ}.
QuadratureResult RadialQuadrature::tail(const Fn& f, double a) const {
  auto g = [&](double tau) {
    const double r = a * std::exp(tau);
    if (!std::isfinite(r)) return 0.0;
    return guarded(f, r);
  };
  QuadratureResult out;
  out.value = exp_rule().integrate(g, 0.0, std::numeric_limits<double>::infinity(), opts_.tolerance, &out.error, &out.l1);
  return out;
}

void RadialQuadrature::check(const QuadratureResult& r, const char* where) const {
  const double scale = std::max(r.l1, std::numeric_limits<double>::min());
  if (!std::isfinite(r.value) || r.error > opts_.budget * scale) {
    std::ostringstream os;
    os << where << ": quadrature error " << r.error << " exceeds budget " << opts_.budget
       << " relative to L1 norm " << r.l1;
    throw ConvergenceError(os.str(), r.error);
  }
}

QuadratureResult RadialQuadrature::half_line(const Fn& f, double scale) const {
  if (!(scale > 0)) throw InvalidArgument("quadrature scale must be positive");
  const auto r = head(f, scale) + tail(f, scale);
  check(r, "half_line");
  return r;
}

QuadratureResult RadialQuadrature::between(const Fn& f, double a, double b) const {
  if (!(a > 0 && b > a)) throw InvalidArgument("between() needs 0 < a < b");
  auto g = [&](double rho) {
    const double r = std::exp(rho);
    return f(r) * r;
  };
  QuadratureResult out;
  out.value = tanh_rule().integrate(g, std::log(a), std::log(b), opts_.tolerance, &out.error, &out.l1);
  check(out, "between");
  return out;
}

QuadratureResult RadialQuadrature::to_radius(const Fn& f, double R, double scale) const {
  if (!(R > 0 && scale > 0)) throw InvalidArgument("to_radius() needs R > 0 and scale > 0");
  QuadratureResult r;
  if (scale >= R) {
    r = head(f, R);
  } else {
    r = head(f, scale);
    auto g = [&](double rho) {
      const double x = std::exp(rho);
      return f(x) * x;
    };
    QuadratureResult t;
    t.value = tanh_rule().integrate(g, std::log(scale), std::log(R), opts_.tolerance, &t.error, &t.l1);
    r = r + t;
  }
  check(r, "to_radius");
  return r;
}

}  // namespace hslab
