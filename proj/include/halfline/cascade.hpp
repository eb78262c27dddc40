#pragma once

// Reference solver built on the lower-triangular mode coupling.
//
// With one-sided data, mode n of  sum_l lambda_l u^l d_x u  only involves
// modes <= n, and the only mode-n contribution is the transport term
// i n (sum_l lambda_l m0^l) u^(n). Each mode therefore obeys a scalar linear
// ODE whose forcing is already known once the lower modes are solved:
//
//   u^(t,n) = exp(i omega_n t) zeta_n(t),
//   omega_n = mu(n) + n * sum_l lambda_l m0^l,
//   zeta_n(t) = phi^(n) + int_0^t exp(-i omega_n s) F_n(s) ds.
//
// Modes are solved in increasing n, the integrals by panel quadrature on a
// shared grid that is refined until every mode meets the tolerance.

#include <functional>
#include <optional>
#include <string>

#include "halfline/spectral.hpp"
#include "halfline/trajectory.hpp"

namespace halfline {

struct CascadeOptions {
  double tol = 1e-10;
  double kappa = 6.0;
  int max_refinements = 12;
  /// Fixed starting grid; when unset one is chosen from the highest frequency.
  std::optional<quad::PanelGrid> grid;
  bool adaptive = true;
  double overflow_limit = 1e100;
};

struct CascadeDiagnostics {
  int refinements = 0;
  std::size_t panels = 0;
  double worst_excess = 0.0;
  std::size_t worst_mode = 0;
};

/// Mode n of  sum_l lambda_l u^l d_x u  computed from modes <= n.
cplx nonlinear_forcing(const SpectralState& u, const EquationSpec& spec, std::size_t n);

Trajectory cascade_integrate(const SpectralState& phi, const EquationSpec& spec, double T,
                             const CascadeOptions& options = {}, CascadeDiagnostics* diag = nullptr);

/// Frame frequencies omega_n for data with mean m0.
std::vector<cplx> cascade_frequencies(const EquationSpec& spec, std::size_t truncation, cplx m0);

/// Linear transport problem  d_t v = lambda d_x v:  v^(t,n) = exp(i lambda t n) phi^(n).
SpectralState linear_transport(const SpectralState& phi, cplx lambda, double t);
/// Full linear equation with dispersion: u^(t,n) = exp(i t (mu(n) + lambda n)) phi^(n).
SpectralState linear_solve(const SpectralState& phi, const EquationSpec& spec, cplx lambda, double t);

/// Closed-form trajectory for data c delta_0 + a delta_N.
Trajectory single_mode_trajectory(const EquationSpec& spec, std::size_t truncation, cplx c, cplx a,
                                  std::size_t N, double T, double kappa = 4.0);

/// Equation satisfied by w = u - m0 in the transported frame:
/// lambda'_j = sum_l lambda_l binom(l, j) m0^(l-j), j >= 1.
EquationSpec mean_zero_spec(const EquationSpec& spec, cplx m0);

/// w^(t,n) = u^(t,n) exp(-i t r n) for n >= 1 and w^(t,0) = u^(t,0) - m0,
/// where r = sum_l lambda_l m0^l (= m0^k for the pure power).
SpectralState mean_zero_transform(const SpectralState& u, const EquationSpec& spec, cplx m0);
SpectralState inverse_mean_zero_transform(const SpectralState& w, const EquationSpec& spec, cplx m0);
Trajectory mean_zero_transform(const Trajectory& u, cplx m0);
Trajectory inverse_mean_zero_transform(const Trajectory& w, const EquationSpec& u_spec, cplx m0);

/// Smooth time window with theta(T) = 0.
struct TimeWindow {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> derivative;

  static TimeWindow quadratic(double T);
  static TimeWindow cosine(double T);
  static TimeWindow cubic_exponential(double T);
};

/// Defect of the distributional formulation tested against
/// chi(t, x) = theta(t) exp(-i m x), normalized by 2 pi:
///   -int theta' u^(m) - theta(0) phi^(m) - i mu(m) int theta u^(m)
///   - sum_l lambda_l (i m / (l+1)) int theta (u^(l+1))^(m).
cplx weak_residual(const Trajectory& traj, std::size_t m, const TimeWindow& theta);

}  // namespace halfline
