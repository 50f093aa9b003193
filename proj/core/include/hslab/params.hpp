#pragma once

#include <cstdint>

namespace hslab {

/// Dimension n ≥ 3 and singularity exponent 0 ≤ s < 2.
struct ProblemParams {
  ProblemParams(int n, double s);

  int n;
  double s;

  /// 2*(s) = 2(n−s)/(n−2).
  double two_star() const { return 2.0 * (n - s) / (n - 2); }
};

double critical_exponent(const ProblemParams& p);

/// c_{n,s} = (n−2)(6−s) / (12(2n−2−s)).
double cns(const ProblemParams& p);

struct Rational {
  std::int64_t num;
  std::int64_t den;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// Exact c_{n,s} for s = s_num/s_den, reduced to lowest terms.
Rational cns_rational(int n, std::int64_t s_num, std::int64_t s_den);

/// ω_{n−1} = 2π^{n/2}/Γ(n/2), the area of the unit sphere in ℝⁿ.
double sphere_area(int n);

}  // namespace hslab
