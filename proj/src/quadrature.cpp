#include "halfline/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "halfline/errors.hpp"

namespace halfline::quad {

void gauss_legendre(int n, std::vector<long double>& x, std::vector<long double>& w) {
  x.assign(n, 0.0L);
  w.assign(n, 0.0L);
  const long double pi = std::numbers::pi_v<long double>;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    long double z = std::cos(pi * (i + 0.75L) / (n + 0.5L));
    long double dp = 0.0L;
    for (int it = 0; it < 100; ++it) {
      long double p0 = 1.0L, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const long double p2 = ((2.0L * k - 1.0L) * z * p1 - (k - 1.0L) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0L);
      const long double dz = p1 / dp;
      z -= dz;
      if (std::fabs(dz) < 1e-19L) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0L / ((1.0L - z * z) * dp * dp);
  }
}

namespace {

ChebyshevRule build_rule() {
  ChebyshevRule r;
  constexpr int d = kDegree;
  const long double pi = std::numbers::pi_v<long double>;
  std::array<long double, kNodes> xl{};
  std::array<long double, kNodes> bw{};
  for (int j = 0; j <= d; ++j) {
    xl[j] = -std::cos(pi * j / d);
    bw[j] = (j % 2 == 0 ? 1.0L : -1.0L) * ((j == 0 || j == d) ? 0.5L : 1.0L);
  }
  xl[0] = -1.0L;
  xl[d] = 1.0L;
  xl[d / 2] = 0.0L;

  auto basis = [&](long double y, std::array<long double, kNodes>& out) {
    long double denom = 0.0L;
    for (int j = 0; j <= d; ++j) {
      if (y == xl[j]) {
        out.fill(0.0L);
        out[j] = 1.0L;
        return;
      }
      out[j] = bw[j] / (y - xl[j]);
      denom += out[j];
    }
    for (auto& v : out) v /= denom;
  };

  std::vector<long double> gx, gw;
  gauss_legendre(24, gx, gw);
  std::array<long double, kNodes> ell{};
  for (int i = 0; i <= d; ++i) {
    const long double half = (xl[i] + 1.0L) / 2.0L;
    std::array<long double, kNodes> acc{};
    for (std::size_t q = 0; q < gx.size(); ++q) {
      const long double y = -1.0L + half * (gx[q] + 1.0L);
      basis(y, ell);
      for (int j = 0; j <= d; ++j) acc[j] += gw[q] * half * ell[j];
    }
    for (int j = 0; j <= d; ++j) r.integ[i * kNodes + j] = static_cast<double>(acc[j]);
  }

  for (int k = 0; k <= d; ++k) {
    for (int j = 0; j <= d; ++j) {
      long double f = 2.0L / d * std::cos(k * std::acos(std::clamp(xl[j], -1.0L, 1.0L)));
      if (j == 0 || j == d) f *= 0.5L;
      if (k == 0 || k == d) f *= 0.5L;
      r.to_cheb[k * kNodes + j] = static_cast<double>(f);
    }
  }
  for (int j = 0; j <= d; ++j) {
    r.x[j] = static_cast<double>(xl[j]);
    r.bary[j] = static_cast<double>(bw[j]);
  }
  return r;
}

}  // namespace

const ChebyshevRule& ChebyshevRule::get() {
  static const ChebyshevRule rule = build_rule();
  return rule;
}

const std::array<double, kNodes>& panel_weights() {
  static const std::array<double, kNodes> w = [] {
    std::array<double, kNodes> out{};
    const auto& r = ChebyshevRule::get();
    for (int j = 0; j < kNodes; ++j) out[j] = r.integ[kDegree * kNodes + j];
    return out;
  }();
  return w;
}

PanelGrid::PanelGrid(std::vector<double> breaks) : breaks_(std::move(breaks)) {
  require(breaks_.size() >= 2, "panel grid needs at least one panel");
  for (std::size_t i = 1; i < breaks_.size(); ++i)
    require(breaks_[i] > breaks_[i - 1], "panel breaks must be strictly increasing");
}

PanelGrid PanelGrid::for_frequency(double T, double max_frequency, double kappa, std::size_t min_panels) {
  require(T > 0.0 && std::isfinite(T), "final time must be positive and finite");
  const double freq = std::max(max_frequency, 1.0);
  auto count = static_cast<std::size_t>(std::ceil(T * freq / kappa));
  count = std::max(count, min_panels);
  require(count < 50'000'000, "time grid would exceed 5e7 panels");
  std::vector<double> b(count + 1);
  for (std::size_t i = 0; i <= count; ++i) b[i] = T * static_cast<double>(i) / static_cast<double>(count);
  b.back() = T;
  return PanelGrid(std::move(b));
}

double PanelGrid::node_time(std::size_t p, int j) const {
  if (j == 0) return breaks_[p];
  if (j == kDegree) return breaks_[p + 1];
  const auto& r = ChebyshevRule::get();
  return breaks_[p] + 0.5 * (r.x[j] + 1.0) * width(p);
}

std::vector<double> PanelGrid::node_times() const {
  std::vector<double> t(node_count());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = node_time(i);
  return t;
}

std::pair<std::size_t, double> PanelGrid::locate(double t) const {
  require(t >= breaks_.front() - 1e-12 * std::abs(breaks_.back()) &&
              t <= breaks_.back() * (1.0 + 1e-12) + 1e-300,
          "time lies outside the trajectory interval");
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
  std::size_t p = it == breaks_.begin() ? 0 : static_cast<std::size_t>(it - breaks_.begin()) - 1;
  p = std::min(p, panels() - 1);
  const double x = std::clamp(2.0 * (t - breaks_[p]) / width(p) - 1.0, -1.0, 1.0);
  return {p, x};
}

PanelGrid PanelGrid::refined(const std::vector<char>& split) const {
  std::vector<double> b;
  b.reserve(breaks_.size() * 2);
  for (std::size_t p = 0; p < panels(); ++p) {
    b.push_back(breaks_[p]);
    if (split[p]) b.push_back(0.5 * (breaks_[p] + breaks_[p + 1]));
  }
  b.push_back(breaks_.back());
  return PanelGrid(std::move(b));
}

void cumulative_integral(const PanelGrid& grid, std::span<const cplx> g, std::span<cplx> out, cplx start) {
  require(g.size() == grid.node_count() && out.size() == g.size(), "node field size mismatch");
  const auto& r = ChebyshevRule::get();
  cplx running = start;
  for (std::size_t p = 0; p < grid.panels(); ++p) {
    const double half = 0.5 * grid.width(p);
    const cplx* gp = g.data() + p * kNodes;
    cplx* op = out.data() + p * kNodes;
    op[0] = running;
    for (int i = 1; i < kNodes; ++i) {
      cplx acc{};
      const double* row = r.integ.data() + i * kNodes;
      for (int j = 0; j < kNodes; ++j) acc += row[j] * gp[j];
      op[i] = running + half * acc;
    }
    running = op[kDegree];
  }
}

double chebyshev_tail(std::span<const cplx> v) {
  const auto& r = ChebyshevRule::get();
  double tail = 0.0;
  for (int k = kDegree - 1; k <= kDegree; ++k) {
    cplx c{};
    const double* row = r.to_cheb.data() + k * kNodes;
    for (int j = 0; j < kNodes; ++j) c += row[j] * v[j];
    tail += std::abs(c);
  }
  return tail;
}

double max_abs(std::span<const cplx> v) {
  double m = 0.0;
  for (const auto& z : v) m = std::max(m, std::abs(z));
  return m;
}

cplx interpolate(std::span<const cplx> v, double x) {
  const auto& r = ChebyshevRule::get();
  cplx num{};
  double den = 0.0;
  for (int j = 0; j < kNodes; ++j) {
    const double dx = x - r.x[j];
    if (dx == 0.0) return v[j];
    const double w = r.bary[j] / dx;
    num += w * v[j];
    den += w;
  }
  return num / den;
}

void RefinementTracker::examine(const PanelGrid& grid, std::span<const cplx> g, double allowed_rate,
                                std::size_t mode, double noise_floor) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t p = 0; p < grid.panels(); ++p) {
    auto gp = g.subspan(p * kNodes, kNodes);
    const double tail = chebyshev_tail(gp);
    if (tail == 0.0) continue;
    const double allowed = allowed_rate + std::max(noise_floor, 100.0 * eps * max_abs(gp));
    const double excess = tail / allowed;
    if (excess > 1.0) split[p] = 1;
    if (excess > worst_excess) {
      worst_excess = excess;
      worst_mode = mode;
    }
  }
}

bool RefinementTracker::any() const {
  return std::any_of(split.begin(), split.end(), [](char c) { return c != 0; });
}

}  // namespace halfline::quad
