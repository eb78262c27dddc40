#include "halfline/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "halfline/errors.hpp"

namespace halfline {

Trajectory::Trajectory(EquationSpec spec, quad::PanelGrid grid, std::vector<cplx> omega,
                       std::vector<Coeffs> zeta, double quadrature_tolerance)
    : spec_(std::move(spec)),
      grid_(std::move(grid)),
      omega_(std::move(omega)),
      zeta_(std::move(zeta)),
      tol_(quadrature_tolerance) {
  require(omega_.size() >= 2, "trajectory needs truncation M >= 1");
  require(zeta_.size() == omega_.size(), "trajectory mode count mismatch");
  for (const auto& z : zeta_)
    require(z.empty() || z.size() == grid_.node_count(), "trajectory node count mismatch");
}

cplx Trajectory::frame_value(std::size_t n, std::size_t node) const {
  return zeta_[n].empty() ? cplx{} : zeta_[n][node];
}

cplx Trajectory::frame_value_at(std::size_t n, double t) const {
  if (zeta_[n].empty()) return {};
  const auto [p, x] = grid_.locate(t);
  return quad::interpolate(std::span<const cplx>(zeta_[n]).subspan(p * quad::kNodes, quad::kNodes), x);
}

namespace {
cplx frame_factor(cplx omega, double t) {
  // exp(i omega t) = exp(-Im(omega) t) * exp(i Re(omega) t)
  return std::exp(-omega.imag() * t) * std::polar(1.0, omega.real() * t);
}
}  // namespace

cplx Trajectory::value(std::size_t n, std::size_t node) const {
  if (zeta_[n].empty()) return {};
  return frame_factor(omega_[n], grid_.node_time(node)) * zeta_[n][node];
}

cplx Trajectory::value_at(std::size_t n, double t) const {
  if (zeta_[n].empty()) return {};
  return frame_factor(omega_[n], t) * frame_value_at(n, t);
}

double Trajectory::log_abs_value_at(std::size_t n, double t) const {
  const double z = std::abs(frame_value_at(n, t));
  if (z == 0.0) return -INFINITY;
  return std::log(z) - omega_[n].imag() * t;
}

SpectralState Trajectory::state_at(double t) const {
  Coeffs c(omega_.size());
  for (std::size_t n = 0; n < c.size(); ++n) c[n] = value_at(n, t);
  return SpectralState(std::move(c), t);
}

SpectralState Trajectory::frame_state_at(double t) const {
  Coeffs c(omega_.size());
  for (std::size_t n = 0; n < c.size(); ++n) c[n] = frame_value_at(n, t);
  return SpectralState(std::move(c), t);
}

SpectralState Trajectory::node_state(std::size_t node) const {
  Coeffs c(omega_.size());
  for (std::size_t n = 0; n < c.size(); ++n) c[n] = value(n, node);
  return SpectralState(std::move(c), grid_.node_time(node));
}

std::vector<double> Trajectory::thinned_sample_times(std::size_t max_samples) const {
  const auto& all = grid_.breaks();
  if (max_samples < 2 || all.size() <= max_samples) return all;
  std::vector<double> out;
  out.reserve(max_samples);
  const double step = static_cast<double>(all.size() - 1) / static_cast<double>(max_samples - 1);
  for (std::size_t i = 0; i < max_samples; ++i) {
    const auto idx = static_cast<std::size_t>(std::llround(step * static_cast<double>(i)));
    out.push_back(all[std::min(idx, all.size() - 1)]);
  }
  out.back() = all.back();
  return out;
}

Trajectory Trajectory::retuned(std::vector<cplx> new_omega, cplx mode0_shift, EquationSpec new_spec) const {
  require(new_omega.size() == omega_.size(), "retune: truncation mismatch");
  std::vector<Coeffs> zeta = zeta_;
  if (mode0_shift != cplx{}) {
    if (zeta[0].empty()) zeta[0].assign(grid_.node_count(), cplx{});
    for (auto& z : zeta[0]) z += mode0_shift;
  }
  return Trajectory(std::move(new_spec), grid_, std::move(new_omega), std::move(zeta), tol_);
}

nlohmann::json Trajectory::to_json(std::size_t max_samples) const {
  nlohmann::json samples = nlohmann::json::array();
  for (double t : thinned_sample_times(max_samples)) samples.push_back(halfline::to_json(state_at(t)));
  return {{"spec", halfline::to_json(spec_)},
          {"truncation", truncation()},
          {"final_time", final_time()},
          {"panels", grid_.panels()},
          {"quadrature_tolerance", tol_},
          {"samples", std::move(samples)}};
}

std::string Trajectory::to_csv(std::size_t max_samples) const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "t,n,abs,arg\n";
  for (double t : thinned_sample_times(max_samples)) {
    for (std::size_t n = 0; n <= truncation(); ++n) {
      const cplx v = value_at(n, t);
      os << t << ',' << n << ',' << std::abs(v) << ',' << std::arg(v) << '\n';
    }
  }
  return os.str();
}

double max_mode_difference(const Trajectory& a, const Trajectory& b, std::size_t max_mode) {
  const std::size_t top = std::min({max_mode, a.truncation(), b.truncation()});
  double worst = 0.0;
  const auto times = a.grid().node_times();
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = std::min(times[i], b.final_time());
    for (std::size_t n = 0; n <= top; ++n) worst = std::max(worst, std::abs(a.value(n, i) - b.value_at(n, t)));
  }
  return worst;
}

double max_frame_difference(const Trajectory& a, const Trajectory& b, std::size_t max_mode) {
  const std::size_t top = std::min({max_mode, a.truncation(), b.truncation()});
  double worst = 0.0;
  const auto times = a.grid().node_times();
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = std::min(times[i], b.final_time());
    for (std::size_t n = 0; n <= top; ++n)
      worst = std::max(worst, std::abs(a.frame_value(n, i) - b.frame_value_at(n, t)));
  }
  return worst;
}

}  // namespace halfline
