#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "halfline/quadrature.hpp"
#include "halfline/spectral.hpp"

namespace halfline {

/// Time-dependent one-sided state with dense output.
///
/// Mode n is stored as u^(t,n) = exp(i omega_n t) zeta_n(t), where zeta_n is
/// kept at the Chebyshev nodes of a panel grid and interpolated in between.
/// The frame frequencies omega_n absorb the dispersion and the transport by
/// the conserved mean, so zeta carries neither exponential growth nor the
/// fastest linear oscillation. An empty zeta_n means the mode is identically
/// zero.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(EquationSpec spec, quad::PanelGrid grid, std::vector<cplx> omega,
             std::vector<Coeffs> zeta, double quadrature_tolerance);

  const EquationSpec& spec() const noexcept { return spec_; }
  const quad::PanelGrid& grid() const noexcept { return grid_; }
  std::size_t truncation() const noexcept { return omega_.size() - 1; }
  double final_time() const noexcept { return grid_.end(); }
  double quadrature_tolerance() const noexcept { return tol_; }

  cplx omega(std::size_t n) const { return omega_[n]; }
  const std::vector<cplx>& omegas() const noexcept { return omega_; }
  bool active(std::size_t n) const { return !zeta_[n].empty(); }
  const Coeffs& frame_values(std::size_t n) const { return zeta_[n]; }

  /// zeta_n at a flat node index, or interpolated at time t.
  cplx frame_value(std::size_t n, std::size_t node) const;
  cplx frame_value_at(std::size_t n, double t) const;

  /// u^(t,n) at a node / at time t.
  cplx value(std::size_t n, std::size_t node) const;
  cplx value_at(std::size_t n, double t) const;
  /// log|u^(t,n)| without forming the (possibly huge) value.
  double log_abs_value_at(std::size_t n, double t) const;

  SpectralState state_at(double t) const;
  SpectralState node_state(std::size_t node) const;
  SpectralState frame_state_at(double t) const;

  /// Panel breakpoints; always includes 0 and T.
  const std::vector<double>& sample_times() const { return grid_.breaks(); }
  /// Up to max_samples sample times drawn from the panel breakpoints,
  /// endpoints always included.
  std::vector<double> thinned_sample_times(std::size_t max_samples) const;

  /// Keeps zeta and swaps the frame frequencies, i.e. multiplies mode n by
  /// exp(i (new_omega_n - omega_n) t); mode 0 is then shifted by mode0_shift.
  Trajectory retuned(std::vector<cplx> new_omega, cplx mode0_shift, EquationSpec new_spec) const;

  nlohmann::json to_json(std::size_t max_samples = 201) const;
  /// Rows: t, n, |u^|, arg u^.
  std::string to_csv(std::size_t max_samples = 201) const;

 private:
  EquationSpec spec_;
  quad::PanelGrid grid_;
  std::vector<cplx> omega_{0.0, 0.0};
  std::vector<Coeffs> zeta_{Coeffs{}, Coeffs{}};
  double tol_ = 0.0;
};

/// sup over all grid nodes and modes of |a^(t,n) - b^(t,n)|. The grids may
/// differ; b is evaluated by dense output at a's nodes.
double max_mode_difference(const Trajectory& a, const Trajectory& b, std::size_t max_mode);
/// Same comparison in the frame variables zeta.
double max_frame_difference(const Trajectory& a, const Trajectory& b, std::size_t max_mode);

}  // namespace halfline
