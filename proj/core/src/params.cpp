#include "hslab/params.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "hslab/error.hpp"

namespace hslab {

ProblemParams::ProblemParams(int n_, double s_) : n(n_), s(s_) {
  if (n < 3) throw InvalidArgument("dimension n must be >= 3, got " + std::to_string(n));
  if (!(s >= 0.0 && s < 2.0)) throw InvalidArgument("s must lie in [0,2), got " + std::to_string(s));
}

double critical_exponent(const ProblemParams& p) { return p.two_star(); }

double cns(const ProblemParams& p) {
  return (p.n - 2) * (6.0 - p.s) / (12.0 * (2.0 * p.n - 2.0 - p.s));
}

Rational cns_rational(int n, std::int64_t s_num, std::int64_t s_den) {
  if (s_den <= 0) throw InvalidArgument("denominator of s must be positive");
  // (n−2)(6 − a/b) / (12(2n−2 − a/b)) = (n−2)(6b − a) / (12(b(2n−2) − a))
  std::int64_t num = (n - 2) * (6 * s_den - s_num);
  std::int64_t den = 12 * (s_den * (2 * n - 2) - s_num);
  if (den == 0) throw InvalidArgument("c_{n,s} undefined");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  return {num / g, den / g};
}

double sphere_area(int n) {
  using boost::math::constants::pi;
  return 2.0 * std::pow(pi<double>(), 0.5 * n) / boost::math::tgamma(0.5 * n);
}

}  // namespace hslab
