#pragma once

// Piecewise Chebyshev representation of functions of time.
//
// [0, T] is cut into panels; on each panel a function is stored by its values
// at the kNodes Chebyshev-Lobatto points (degree kDegree interpolant).
// Indefinite integrals are taken with a spectral integration matrix, and the
// size of the top Chebyshev coefficients serves as the per-panel error
// estimate that drives refinement.

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace halfline::quad {

using cplx = std::complex<double>;

inline constexpr int kDegree = 16;
inline constexpr int kNodes = kDegree + 1;

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<long double>& x, std::vector<long double>& w);

struct ChebyshevRule {
  std::array<double, kNodes> x{};          // increasing, x[0] = -1, x[kDegree] = 1
  std::array<double, kNodes> bary{};       // barycentric weights
  std::array<double, kNodes * kNodes> integ{};   // (S g)_i = int_{-1}^{x_i} p_g
  std::array<double, kNodes * kNodes> to_cheb{};  // values -> Chebyshev coefficients

  static const ChebyshevRule& get();
};

class PanelGrid {
 public:
  PanelGrid() = default;
  explicit PanelGrid(std::vector<double> breaks);

  /// Uniform grid on [0, T] with panel width about kappa / max_frequency.
  static PanelGrid for_frequency(double T, double max_frequency, double kappa = 6.0,
                                 std::size_t min_panels = 4);

  std::size_t panels() const noexcept { return breaks_.size() - 1; }
  std::size_t node_count() const noexcept { return panels() * kNodes; }
  double start() const noexcept { return breaks_.front(); }
  double end() const noexcept { return breaks_.back(); }
  double left(std::size_t p) const { return breaks_[p]; }
  double width(std::size_t p) const { return breaks_[p + 1] - breaks_[p]; }
  const std::vector<double>& breaks() const noexcept { return breaks_; }

  double node_time(std::size_t p, int j) const;
  double node_time(std::size_t flat) const { return node_time(flat / kNodes, static_cast<int>(flat % kNodes)); }
  std::vector<double> node_times() const;

  /// Panel containing t and the local coordinate in [-1, 1].
  std::pair<std::size_t, double> locate(double t) const;

  /// Bisects every flagged panel.
  PanelGrid refined(const std::vector<char>& split) const;

 private:
  std::vector<double> breaks_{0.0, 1.0};
};

/// out[i] = start + int_0^{t_i} g over all nodes (flat, panel-major).
void cumulative_integral(const PanelGrid& grid, std::span<const cplx> g, std::span<cplx> out,
                         cplx start = {});

/// |c_{d-1}| + |c_d| of the panel interpolant of g.
double chebyshev_tail(std::span<const cplx> panel_values);
double max_abs(std::span<const cplx> panel_values);

/// Barycentric interpolation of one panel's node values at local x in [-1, 1].
cplx interpolate(std::span<const cplx> panel_values, double x);

/// Clenshaw-Curtis weights of the panel rule on [-1, 1].
const std::array<double, kNodes>& panel_weights();

/// Tracks which panels need bisection given per-mode tolerance targets.
struct RefinementTracker {
  std::vector<char> split;
  double worst_excess = 0.0;  // largest tail / allowed ratio seen
  std::size_t worst_mode = 0;

  explicit RefinementTracker(std::size_t panels) : split(panels, 0) {}

  /// Examines the integrand g of one mode; allowed_rate is the permitted
  /// error per unit time. noise_floor is the tail level below which rounding
  /// in forming g makes further refinement pointless.
  void examine(const PanelGrid& grid, std::span<const cplx> g, double allowed_rate, std::size_t mode,
               double noise_floor = 0.0);
  bool any() const;
};

}  // namespace halfline::quad
