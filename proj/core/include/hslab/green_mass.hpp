#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "hslab/geometry.hpp"
#include "hslab/potential.hpp"

namespace hslab {

struct GreenOptions {
  double theta_start = 1e-6;  // singular seed, as a fraction of the radius; raised to 10^{-9/(n-2)} for n >= 5
  double antipode_start = 1e-3;  // regular seed distance from the antipode, fraction of the radius
  double log_step = 0.01;     // node spacing in ln θ (left) and ln(πR − θ) (right)
  double tolerance = 1e-13;   // dopri5 absolute and relative tolerance
};

/// Radial Green's function of Δ_g + h on a round sphere of radius R, pole at
/// θ = 0: −(ρ^{n−1}G′)′/ρ^{n−1} + hG = 0 for θ > 0, ρ = R sin(θ/R), with
/// flux ω_{n−1}ρ^{n−1}G′ → −1 at the pole and G′(πR) = 0.
class GreenFunction {
 public:
  int dim() const { return n_; }
  double radius() const { return R_; }
  const RadialPotential& potential() const { return h_; }

  /// G(θ); off-node values come from a short ODE integration from the nearest node.
  double operator()(double theta) const;
  double derivative(double theta) const;
  /// ω_{n−1}ρ^{n−1}G′(θ).
  double flux(double theta) const;

  const std::vector<double>& theta() const { return theta_; }
  const std::vector<double>& values() const { return G_; }

  /// Regular-part coefficient c in G = S + cZ near the pole (S singular seed, Z regular).
  double regular_coefficient() const { return c_; }
  /// θ^{n−2}G(θ) at the first node; tends to 1/((n−2)ω_{n−1}).
  double singular_normalization() const;

  /// Relative residual of the ODE at θ from five-point differences of G.
  double ode_residual(double theta) const;
  /// max of ode_residual over `samples` log-spaced interior points of each half.
  double max_ode_residual(int samples = 60) const;

  /// ∫(G′φ′ + hGφ)dv − φ(0) for a smooth radial test function φ.
  double delta_defect(const std::function<double(double)>& phi,
                      const std::function<double(double)>& dphi) const;

 private:
  friend GreenFunction solve_green(const ManifoldModel&, const RadialPotential&, const GreenOptions&);
  struct State {
    double G, F;
  };
  State hop(std::size_t node, double theta) const;
  State series(double theta) const;

  int n_ = 3;
  double R_ = 1.0, omega_ = 0.0, tol_ = 1e-13;
  RadialPotential h_;
  double theta_s_ = 0, phi_s_ = 0;
  double c_ = 0, alpha_ = 0;  // G = S + cZ on the left, αY on the right
  double s2_ = 0, h0_ = 0, hpi_ = 0;
  std::vector<double> theta_, G_, F_;
};

/// Two-sided shooting: singular seed and regular solution from the pole, regular
/// solution from the antipode, matched at θ = πR/2.
GreenFunction solve_green(const ManifoldModel& m, const RadialPotential& h, const GreenOptions& opts = {});

/// Closed form for h = n(n−2)/(4R²): G = (2R sin(θ/2R))^{2−n}/((n−2)ω_{n−1}).
double conformal_sphere_green(int n, double R, double theta);

/// Gegenbauer eigen-series for constant h, summed as the difference from the
/// conformal closed form so the tail decays like k^{(n−1)/2−4}·k.
double eigen_series_green(int n, double R, double h, double theta, int terms = 200000);

struct MassFit {
  double lo, hi;
  double mass;      // intercept of the quadratic fit
  double cubic;     // intercept of the cubic fit
  double rms;       // fit residual
};

struct MassReport {
  double h = 0;
  std::vector<double> theta, beta;  // β = G − 1/(4πθ) on the primary window
  double mass = 0;
  double error = 0;
  MassFit primary{}, secondary{};
  bool windows_agree = false;
};

struct MassOptions {
  double window_lo = 1e-3, window_hi = 1e-2;      // primary window, fraction of R
  double check_lo = 1e-2, check_hi = 1e-1;        // stability window
  int samples = 41;
  double error_floor = 1e-9;
  GreenOptions green{};
};

/// Mass β(θ → 0) for n = 3 from quadratic fits of β on two windows.
MassReport mass(const ManifoldModel& m, double h, const MassOptions& opts = {});

struct MassSweep {
  std::vector<MassReport> reports;
  bool decreasing = true;
};
MassSweep mass_sweep(const ManifoldModel& m, const std::vector<double>& hs, int threads = 1,
                     const MassOptions& opts = {});

struct MassRoot {
  double h_star;
  double mass_at_root;
  double lo, hi;
  int evaluations;
};

/// Root of h ↦ m(h) for n = 3. Default bracket [Scal/60, Scal/3].
MassRoot mass_zero_root(const ManifoldModel& m, std::optional<double> lo = std::nullopt,
                        std::optional<double> hi = std::nullopt, const MassOptions& opts = {});

}  // namespace hslab
