#pragma once

#include <functional>
#include <span>
#include <vector>

#include "hslab/bubbles.hpp"
#include "hslab/geometry.hpp"
#include "hslab/params.hpp"
#include "hslab/potential.hpp"
#include "hslab/quadrature.hpp"
#include "hslab/radial_solver.hpp"

namespace hslab {

/// Value, Euclidean gradient and Hessian of a function on the chart.
struct FieldSample {
  double u = 0;
  Point grad;
  Metric hess;
};
using Field = std::function<FieldSample(std::span<const double>)>;

/// u(|X|) with its first two radial derivatives.
Field radial_field(int n, std::function<double(double)> u, std::function<double(double)> du,
                   std::function<double(double)> d2u);
Field bubble_field(const Bubble& b);
/// A radial solve transplanted to normal coordinates: û(X) = u(θ = |X|).
Field profile_field(int n, RadialProfile profile);

struct PohozaevInput {
  ProblemParams params{3, 0.0};
  ManifoldModel metric = ManifoldModel::torus(3, 1.0);
  Field u_hat;
  RadialPotential a_hat{0.0};
  double lambda = 0;
  double delta = 1;
  double mu = 1;  // where the mass of û sits; steers the radial rule
  // û depends on |X| only. On isotropic models (round sphere, flat) every
  // integrand is then radial and one angular sample replaces the sphere rule.
  bool radial = false;
};

struct PohozaevOptions {
  int angular_degree = 8;
  double tolerance = 1e-14;
  double budget = 1e-9;  // relative quadrature error above which a term is rejected
  double christoffel_step = 1e-3;  // finite-difference step for models without closed-form symbols
};

struct Term {
  double value = 0;
  double error = 0;
};

struct PohozaevReport {
  Term B, C, D, D1, D2, D3, D4;
  double identity_residual = 0;  // |C + D − B|
  double combined_error = 0;
};

PohozaevReport pohozaev_terms(const PohozaevInput& in, const PohozaevOptions& opts = {});

/// ∫(X·∇û + (n−2)/2·û)(Δ_ĝû + âû − λû^{2*−1}/|X|^s) dX, which equals B − (C + D) for any smooth û.
Term pohozaev_volume(const PohozaevInput& in, const PohozaevOptions& opts = {});

/// D for a radial û on a round sphere of radius R, reduced to one radial integral:
/// ω∫(rû′ + (n−2)/2·û)(n−1)(cot(r/R)/R − 1/r)û′ r^{n−1} dr.
Term sphere_radial_D(const PohozaevInput& in, std::function<double(double)> u, std::function<double(double)> du,
                     const PohozaevOptions& opts = {});

/// Limit of a finite-μ ladder.
struct LadderFit {
  std::vector<double> mu;
  std::vector<double> ratio;  // term/μ² or term/(μ² ln(1/μ))
  double slope = 0;
  double error = 0;
  bool logarithmic = false;
  bool stable = true;
};

/// `scaled` holds term/μ² per rung. Aitken extrapolation of the three smallest-μ
/// values on a geometric ladder, or with `logarithmic` the slope of term/μ²
/// against ln(1/μ). Needs three rungs.
LadderFit fit_ladder(const std::vector<double>& mu, const std::vector<double>& scaled, bool logarithmic);

/// Flat metric, constant a, û = μ-rescaled canonical bubble.
LadderFit calpha_asymptotic(const ProblemParams& p, double a, const std::vector<double>& mu_ladder,
                            double delta = 1.0, int threads = 1, const PohozaevOptions& opts = {});

/// n = 4: ∫_{B_{δ/μ}} X^{b1}X^{b2}∂_iũ∂_jũ dX / ln(1/μ) (1-based indices).
LadderFit log_moment_lemma(const ProblemParams& p, int i, int j, int b1, int b2, const std::vector<double>& mu_ladder,
                           double delta = 1.0, const PohozaevOptions& opts = {});

/// D_α slope from ready-made inputs sharing one manifold.
LadderFit dalpha_asymptotic(const std::vector<PohozaevInput>& ladder, int threads = 1, const PohozaevOptions& opts = {});
/// Quadrature budget and refinement target used for transplanted radial solves.
inline constexpr double kProfileBudget = 1e-6;
inline constexpr double kProfileTolerance = 1e-10;

/// D_α slope from radial solves transplanted to normal coordinates on `m`.
/// The quadrature budget and tolerance are relaxed to the kProfile values.
LadderFit dalpha_asymptotic(const ManifoldModel& m, const std::vector<RadialSolveResult>& ladder, double delta,
                            int threads = 1, const PohozaevOptions& opts = {});

/// Expected D slope: −c_{n,s}·Scal·∫ũ² (n ≥ 5) or −(1/6)Scal·ω_3K⁴ (n = 4).
double dalpha_target(const ProblemParams& p, double scal);
/// Expected C slope: a∫ũ² (n ≥ 5) or a·ω_3K⁴ (n = 4).
double calpha_target(const ProblemParams& p, double a);

/// Flat-space inputs û = μ-rescaled bubble with constant a.
std::vector<PohozaevInput> flat_bubble_ladder(const ProblemParams& p, double a, double delta,
                                              const std::vector<double>& mu_ladder);

/// max over the ladder of |C + D|/(δμ); n = 3 only.
double n3_bound_check(const std::vector<PohozaevInput>& ladder, const PohozaevOptions& opts = {});

}  // namespace hslab
