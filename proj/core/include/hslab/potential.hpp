#pragma once

#include <functional>
#include <utility>

namespace hslab {

/// A radial potential: a constant, or a function of geodesic distance.
class RadialPotential {
 public:
  RadialPotential(double c = 0.0) : constant_(c) {}  // NOLINT(google-explicit-constructor)
  explicit RadialPotential(std::function<double(double)> f) : fn_(std::move(f)) {}

  double operator()(double r) const { return fn_ ? fn_(r) : constant_; }
  bool is_constant() const { return !fn_; }
  double constant() const { return constant_; }
  RadialPotential shifted(double c) const;

 private:
  double constant_ = 0.0;
  std::function<double(double)> fn_;
};

}  // namespace hslab
