#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hslab/bubbles.hpp"
#include "hslab/geometry.hpp"
#include "hslab/params.hpp"
#include "hslab/potential.hpp"

namespace hslab {

class GreenFunction;

struct GridOptions {
  double theta_min = 1e-6;  // first positive node, as a fraction of the radius
  double log_step = 0.01;   // uniform spacing in ln θ
  int gauss_points = 4;
};

struct RadialProblem {
  ProblemParams params;
  ManifoldModel manifold;
  RadialPotential a;
  GridOptions grid{};
};

/// Symmetric tridiagonal matrix: diagonal d, off-diagonal o (o[i] couples i, i+1).
struct Tridiag {
  std::vector<double> d, o;
  std::vector<double> apply(const std::vector<double>& u) const;
  /// Gaussian elimination with partial pivoting; works for indefinite matrices.
  std::vector<double> solve(const std::vector<double>& rhs) const;
  /// Number of eigenvalues of (*this − σ·M) below zero (Sturm count).
  int negative_count(const Tridiag& M, double sigma) const;
};

/// P1 elements on {0} ∪ log-uniform nodes θ_min·R .. πR. Volume element
/// ω_{n−1}ρ(r)^{n−1}dr with ρ = R sin(r/R); singular weight r^{−s}.
class RadialDiscretization {
 public:
  RadialDiscretization(const ProblemParams& p, const ManifoldModel& m, const GridOptions& g = {});

  const ProblemParams& params() const { return p_; }
  const std::vector<double>& nodes() const { return r_; }
  std::size_t size() const { return r_.size(); }
  double radius() const { return radius_; }
  const GridOptions& grid() const { return grid_; }

  /// ∫(|u′|² + a u²) dv as a tridiagonal form.
  Tridiag quadratic_form(const RadialPotential& a) const;
  /// ∫ f φ_i φ_j dv for f sampled at the quadrature points.
  Tridiag weighted_mass(const std::vector<double>& f_at_q) const;
  Tridiag mass() const;

  /// ∫ |u|^{2*}/r^s dv.
  double constraint(const std::vector<double>& u) const;
  /// ∫ u² dv.
  double l2_squared(const std::vector<double>& u) const;
  /// b_i = ∫ |u|^{2*−2}u φ_i r^{−s} dv, the gradient of constraint()/2*.
  std::vector<double> constraint_gradient(const std::vector<double>& u) const;
  /// Tridiagonal ∫ (2*−1)|u|^{2*−2} φ_iφ_j r^{−s} dv.
  Tridiag constraint_hessian(const std::vector<double>& u) const;

  std::vector<double> interpolate(const std::vector<double>& u) const;
  const std::vector<double>& quad_points() const { return qr_; }

 private:
  ProblemParams p_;
  GridOptions grid_;
  double radius_;
  std::vector<double> r_;      // nodes
  std::vector<double> qr_;     // quadrature points
  std::vector<int> qc_;        // owning cell
  std::vector<double> ql_;     // local coordinate in the cell
  std::vector<double> wv_;     // volume weight
  std::vector<double> ws_;     // volume weight × r^{−s}
  std::vector<double> cellv_;  // ∫_cell dv
};

struct EnergyValue {
  double J;
  double constraint;
};

/// J(u) = ∫(|u′|²+au²)dv / (∫|u|^{2*}/r^s dv)^{2/2*} on the problem's grid.
EnergyValue energy(const RadialProblem& problem, const std::vector<double>& u);
EnergyValue energy(const RadialDiscretization& disc, const RadialPotential& a, const std::vector<double>& u);

/// Smallest generalized eigenvalue of ∫(|u′|²+au²) against ∫u² (Sturm bisection).
double smallest_radial_eigenvalue(const RadialDiscretization& disc, const RadialPotential& a);

struct SolveOptions {
  int max_gradient_iterations = 20000;
  double newton_switch = 1e-5;  // gradient flow hands over below this EL residual
  int max_newton_iterations = 60;
  double tolerance = 1e-10;     // EL residual target
  double accept_residual = 1e-8;
  double concentration_floor = 20.0;  // μ below floor·(first node) means grid-scale collapse
  double coercivity_tolerance = 1e-10;
  int stagnation_window = 500;  // gradient flow stops if the residual fails to halve over this many steps
  double monotone_tolerance = 1e-9;  // relative slack for λ_a monotonicity in sweeps
};

struct RadialSolveResult {
  ProblemParams params{3, 0.0};
  double radius = 1.0;
  double a_value = 0.0;  // the constant potential, or a(0) otherwise
  std::vector<double> theta;
  std::vector<double> u;
  double lambda = 0;
  double mu = 0;
  double argmax_theta = 0;
  double residual = 0;    // ‖Au − λb‖∞ / max(‖Au‖∞, ‖Mu‖∞)
  double constraint = 0;  // discrete ‖u‖^{2*}_{2*,s}
  double smallest_eigenvalue = 0;
  double a_shift = 0;     // constant added to the problem's potential (pinned solves)
  int morse_index = -1;   // negative eigenvalues of A − λ(2*−1)B; 1 at a constrained minimizer
  int iterations = 0;
  bool converged = false;
  std::string status;     // "converged", "concentrated", "concentrating", "stagnated", "max-iterations"
};

/// Normalized nonnegative minimizer of J over the discrete constraint set.
class RadialSolver {
 public:
  explicit RadialSolver(RadialProblem problem, SolveOptions opts = {});

  const RadialProblem& problem() const { return problem_; }
  const RadialDiscretization& discretization() const { return disc_; }

  RadialSolveResult minimize(const std::vector<double>* initial = nullptr) const;
  /// Solve with u(0) pinned to mu^{−(n−2)/2}; the constant added to a is an unknown.
  /// `from` supplies the starting iterate, its λ and its potential shift.
  RadialSolveResult solve_pinned(double mu, const RadialSolveResult& from) const;
  EnergyValue energy(const std::vector<double>& u) const { return hslab::energy(disc_, problem_.a, u); }
  /// Generic starting profile: a bubble of scale `width` on top of a constant.
  std::vector<double> initial_guess(double width = 0.5) const;

 private:
  RadialProblem problem_;
  SolveOptions opts_;
  RadialDiscretization disc_;
};

RadialSolveResult minimize(const RadialProblem& problem, const SolveOptions& opts = {});

struct SweepRow {
  double a;
  double lambda;
  double mu;
  double argmax_theta;
  double residual;
  double gap;  // (μ_s − λ)/μ_s
  bool converged;
  std::string status;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double mu_s = 0;
  double eps_gap = 0;  // relative gap threshold
  std::optional<double> a_star;
  std::optional<double> a_star_loose;  // ε_gap × √10
  std::optional<double> a_star_tight;  // ε_gap / √10
  bool monotone = true;
  std::string status;  // "ok", "all-below" (gap never closes), "all-above"
};

/// Solve on every grid value (in parallel, each from the same cold start) and
/// locate a* = inf{a : μ_s − λ_a < ε_gap·μ_s} by linear interpolation of the gap.
SweepResult sweep_threshold(const RadialProblem& problem, const std::vector<double>& a_grid,
                            double eps_gap_rel = 1e-3, int threads = 1, const SolveOptions& opts = {});

/// First a at which the gap drops below eps (linear interpolation between rows).
std::optional<double> threshold_crossing(const std::vector<SweepRow>& rows, double eps_rel);

/// Blow-up ladder by continuation in μ. The solve of `start` must converge with
/// μ above the first target; each rung pins u(0) = μ^{−(n−2)/2} and solves for
/// (u, λ, shift of a) by bordered Newton, stepping ln μ from a dilated predictor.
/// A rung is reported converged only if the linearized operator has Morse index 1.
std::vector<RadialSolveResult> blowup_ladder(const RadialProblem& start, const std::vector<double>& mu_targets,
                                             const SolveOptions& opts = {}, double log_mu_step = 0.1);

struct PointwiseBounds {
  double C_upper;
  double C_lower;
};

/// max/min over the grid of u·(μ^{2−s} + θ^{2−s}/K^{2−s})^{(n−2)/(2−s)} / μ^{(n−2)/2}.
PointwiseBounds pointwise_bound_check(const RadialSolveResult& r);
/// Same expression for an arbitrary profile (used on exact bubbles).
PointwiseBounds pointwise_bound_check(const ProblemParams& p, const std::vector<double>& theta,
                                      const std::vector<double>& u, double mu);

/// max over θ ≥ Rμ of |u′(θ)|(θ² + μ²)^{(n−1)/2} / μ^{(n−2)/2}.
double gradient_bound_check(const RadialSolveResult& r, double R = 5.0);
double gradient_bound_check(const ProblemParams& p, const std::vector<double>& theta,
                            const std::vector<double>& du, double mu, double R = 5.0);

/// sup over θ ∈ [1, πR − 0.1] of |μ^{−(n−2)/2}u/(d_n G) − 1|.
double green_profile_check(const RadialSolveResult& r, const GreenFunction& g, std::optional<double> d_n = std::nullopt);

/// Smooth reconstruction of a nodal solve: cubic spline in ln θ for u and u′;
/// u″ from the Euler–Lagrange equation −u″ − (n−1)(ρ′/ρ)u′ + au = λu^{2*−1}/θ^s.
class RadialProfile {
 public:
  RadialProfile(const RadialSolveResult& r, RadialPotential a);
  double value(double theta) const;
  double d1(double theta) const;
  double d2(double theta) const;
  double max_theta() const { return theta_max_; }

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  double theta_max_;
};

}  // namespace hslab
