#pragma once

#include <cstddef>
#include <functional>

namespace hslab {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  // difference between the last two refinement levels
  double l1 = 0.0;     // ∫|f|, the scale the error is judged against
};

/// Double-exponential quadrature in ρ = ln r. Powers of r at 0 and algebraic
/// tails at ∞ both become exponentially decaying in ρ.
class RadialQuadrature {
 public:
  using Fn = std::function<double(double)>;

  struct Options {
    double tolerance = 1e-14;  // refinement target handed to the DE rule
    double budget = 1e-9;      // relative error above which a result is rejected
  };

  RadialQuadrature() = default;
  explicit RadialQuadrature(Options opts) : opts_(opts) {}

  /// ∫_0^∞ f(r) dr. `scale` marks where the integrand's mass sits.
  QuadratureResult half_line(const Fn& f, double scale = 1.0) const;

  /// ∫_0^R f(r) dr.
  QuadratureResult to_radius(const Fn& f, double R, double scale = 1.0) const;

  /// ∫_a^b f(r) dr with 0 < a < b.
  QuadratureResult between(const Fn& f, double a, double b) const;

  const Options& options() const { return opts_; }

 private:
  QuadratureResult head(const Fn& f, double b) const;
  QuadratureResult tail(const Fn& f, double a) const;
  void check(const QuadratureResult& r, const char* where) const;

  Options opts_{};
};

}  // namespace hslab
