#pragma once

// Gauge-transformed system for alpha = 2 and the pure power u^k d_x u.
//
// With L = d_t + i d_x^2, Lambda = (1/2i) int_0^x u^k and frak_u = e^{-Lambda} d_x u,
// the pair (u, frak_u) solves a system whose nonlinearities carry no
// derivatives. Point values at x = 0 are coefficient sums; every product of
// one-sided series is exact on modes <= M, but point values see only the
// retained modes, so the truncated system matches the truncated equation up
// to the size of the discarded tail.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "halfline/spectral.hpp"
#include "halfline/trajectory.hpp"

namespace halfline {

/// x -> slope * x + periodic(x), normalized so the value at x = 0 is zero.
struct GaugeWeight {
  Coeffs periodic;
  cplx secular_slope{};
};

/// Primitive int_0^x g.
GaugeWeight primitive_from_zero(std::span<const cplx> g);

/// Lambda = (1/2i) int_0^x u^k. Fails if the mean of u^k exceeds 1e-12.
GaugeWeight gauge_lambda(const SpectralState& u, int k);

/// Coefficients of exp(c Lambda); fails on a nonzero secular slope.
Coeffs gauge_exp(const GaugeWeight& w, double c);

struct GaugeRhs {
  Coeffs lu;       // right side of L u
  Coeffs lfrak;    // right side of L frak_u
  cplx secular_slope{};  // slope of the (k-1) primitive term
};

GaugeRhs gauge_system_rhs(std::span<const cplx> u, std::span<const cplx> frak, int k);

/// psi = e^{-Lambda(phi)} d_x phi, the data making frak_u = e^{-Lambda} d_x u hold at t = 0.
SpectralState compatible_psi(const SpectralState& phi, int k);

/// Defect of frak_u = e^{-Lambda(u)} d_x u in the H^0 norm.
double gauge_identity_defect(const SpectralState& u, const SpectralState& frak, int k);

struct GaugeOptions {
  double tol = 1e-12;
  int max_iter = 200;
  double kappa = 6.0;
  double quad_tol = 1e-12;
  int max_refinements = 8;
  double smallness_threshold = 0.5;  // on ||phi||_H1 + ||psi||_H1
  double slope_limit = 1e-10;
};

struct GaugeLogRow {
  int iteration = 0;
  double diff = 0.0;
  double ratio = 0.0;
};

struct GaugeResult {
  Trajectory u;
  Trajectory frak;
  std::vector<GaugeLogRow> log;
  double max_secular_slope = 0.0;
  int refinements = 0;
  /// (t, defect) at the panel breakpoints.
  std::vector<std::pair<double, double>> identity_defect;
};

GaugeResult gauge_picard_solve(const SpectralState& phi, const SpectralState& psi, int k, double T,
                               const GaugeOptions& options = {});

/// e^{Lambda} L(e^{-Lambda} f) - [L f + (-L Lambda + i (d_x Lambda)^2) f - 2i (d_x Lambda) d_x f]
/// at time t for f, Lambda given as polynomials in t with one-sided
/// coefficient vectors (f_poly[j] multiplies t^j). Time derivatives are taken
/// by dual-number arithmetic. Returns the max-modulus of the defect.
double conjugation_identity_defect(const std::vector<Coeffs>& f_poly, const std::vector<Coeffs>& lambda_poly,
                                   double t);

std::string gauge_log_csv(const std::vector<GaugeLogRow>& log);

}  // namespace halfline
