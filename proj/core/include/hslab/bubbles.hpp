#pragma once

#include <span>
#include <utility>
#include <vector>

#include "hslab/params.hpp"
#include "hslab/quadrature.hpp"

namespace hslab {

/// Constants attached to (n, s). μ_s comes from quadrature, never a table.
struct BubbleConstants {
  double mu_s;   // best Euclidean Hardy–Sobolev constant
  double K;      // K^{2−s} = (n−2)(n−s)/μ_s
  double d_n;    // μ_s ∫ ũ^{2*−1}/|X|^s
  double omega;  // ω_{n−1}
};

BubbleConstants bubble_constants(const ProblemParams& p, const RadialQuadrature& q = {});

/// A(c^{2−s}/(c^{2−s}+|X−X0|^{2−s}))^{(n−2)/(2−s)}.
class Bubble {
 public:
  /// The K-normalized extremal centered at 0; unit value at the center.
  static Bubble canonical(const ProblemParams& p);
  /// Scale c0 and center X0 with the amplitude (K/c0)^{(n−2)/2} that keeps
  /// ∫ũ^{2*}/|X|^s = 1. c0 = K reproduces the canonical member.
  static Bubble normalized(const ProblemParams& p, double c0, std::vector<double> X0 = {});
  /// Unit center value at scale c0; solves the equation with a c0-dependent constant.
  static Bubble unit(const ProblemParams& p, double c0, std::vector<double> X0 = {});

  /// μ^{−(n−2)/2} ũ(X/μ); stays normalized.
  Bubble rescaled(double mu) const;

  double operator()(std::span<const double> X) const;
  double profile(double r) const;
  double dprofile(double r) const;
  double d2profile(double r) const;

  const ProblemParams& params() const { return p_; }
  const BubbleConstants& constants() const { return k_; }
  double c0() const { return c0_; }
  double amplitude() const { return amp_; }
  const std::vector<double>& center() const { return x0_; }
  double K() const { return k_.K; }
  double mu_s() const { return k_.mu_s; }
  double d_n() const { return k_.d_n; }
  double omega() const { return k_.omega; }

 private:
  Bubble(ProblemParams p, BubbleConstants k, double c0, double amp, std::vector<double> x0);

  ProblemParams p_;
  BubbleConstants k_;
  double c0_;
  double amp_;
  std::vector<double> x0_;
};

/// ∫|∇U_c|² / (∫U_c^{2*}/|X|^s)^{2/2*} for the unit-amplitude bubble of scale c.
double rayleigh_quotient(const ProblemParams& p, double c, const RadialQuadrature& q = {});

/// μ_s(ℝⁿ) as the Rayleigh quotient of the explicit extremal.
double best_constant_quadrature(const ProblemParams& p, const RadialQuadrature& q = {});

/// ∫ ũ^{2*}/|X|^s dX for the given bubble (centered at 0).
double normalization_check(const Bubble& b, const RadialQuadrature& q = {});

/// K^{2−s}μ_s − (n−2)(n−s) with K taken from the normalization integral
/// rather than from μ_s, so the two routes are independent.
double defk_closure(const ProblemParams& p, const RadialQuadrature& q = {});

struct IdentitySides {
  double lhs;
  double rhs;
};

/// ∫ũ^{2*−1}/|X|^s against K^{n−s}ω_{n−1}/(n−s).
IdentitySides gamma_integral_identity(const ProblemParams& p, const RadialQuadrature& q = {});

/// ∫|X|²|∇ũ|² / ∫ũ² against n(n−2)(n+2−s)/(2(2n−2−s)); needs n ≥ 5.
IdentitySides rayleigh_ratio_identity(const ProblemParams& p, const RadialQuadrature& q = {});

/// ∫ũ² dX for the canonical bubble; needs n ≥ 5.
double bubble_l2_squared(const ProblemParams& p, const RadialQuadrature& q = {});

/// Relative residual of Δũ = μ_s ũ^{2*−1}/r^s at radius r, Δ = −u″ − (n−1)u′/r.
double pde_residual(const Bubble& b, double r);

}  // namespace hslab
