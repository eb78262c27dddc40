#include "halfline/gauge.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "halfline/errors.hpp"
#include "parallel.hpp"

namespace halfline {

namespace {

constexpr cplx kI{0.0, 1.0};

bool all_zero(std::span<const cplx> a) {
  return std::all_of(a.begin(), a.end(), [](const cplx& z) { return z == cplx{}; });
}

// exp(c a) for a one-sided series; the positive-mode part is nilpotent on
// modes <= M, so the series stops once its powers vanish.
Coeffs exp_series(std::span<const cplx> a, cplx c) {
  Coeffs plus(a.begin(), a.end());
  const cplx a0 = plus[0];
  plus[0] = 0.0;
  for (auto& z : plus) z *= c;
  Coeffs result(a.size());
  result[0] = 1.0;
  Coeffs term = result;
  for (int j = 1; !all_zero(term); ++j) {
    term = convolve(term, plus);
    for (auto& z : term) z /= static_cast<double>(j);
    for (std::size_t n = 0; n < result.size(); ++n) result[n] += term[n];
  }
  const cplx scale = std::exp(c * a0);
  for (auto& z : result) z *= scale;
  return result;
}

Coeffs scaled(Coeffs a, cplx s) {
  for (auto& z : a) z *= s;
  return a;
}

Coeffs sum(const Coeffs& a, const Coeffs& b) {
  Coeffs out(a);
  for (std::size_t n = 0; n < out.size(); ++n) out[n] += b[n];
  return out;
}

Coeffs second_derivative(std::span<const cplx> a) {
  Coeffs out(a.size());
  for (std::size_t n = 0; n < a.size(); ++n) out[n] = -static_cast<double>(n * n) * a[n];
  return out;
}

}  // namespace

GaugeWeight primitive_from_zero(std::span<const cplx> g) {
  require(!g.empty(), "primitive of an empty series");
  GaugeWeight w;
  w.secular_slope = g[0];
  w.periodic.assign(g.size(), cplx{});
  cplx total{};
  for (std::size_t n = 1; n < g.size(); ++n) {
    w.periodic[n] = g[n] / cplx{0.0, static_cast<double>(n)};
    total += w.periodic[n];
  }
  w.periodic[0] = -total;
  return w;
}

GaugeWeight gauge_lambda(const SpectralState& u, int k) {
  require(k >= 1, "gauge weight needs k >= 1");
  const Coeffs uk = power(u.coeffs(), static_cast<unsigned>(k));
  if (std::abs(uk[0]) > 1e-12)
    fail(ErrorCode::Domain, "u^k has nonzero mean; its primitive is not periodic (u must be mean-zero)");
  Coeffs g = uk;
  g[0] = 0.0;
  GaugeWeight w = primitive_from_zero(g);
  for (auto& z : w.periodic) z /= cplx{0.0, 2.0};
  return w;
}

Coeffs gauge_exp(const GaugeWeight& w, double c) {
  if (w.secular_slope != cplx{})
    fail(ErrorCode::Domain, "exponential of a weight with secular slope is not periodic");
  return exp_series(w.periodic, c);
}

GaugeRhs gauge_system_rhs(std::span<const cplx> u, std::span<const cplx> frak, int k) {
  require(k >= 1, "gauge system needs k >= 1");
  require(u.size() == frak.size(), "gauge system: truncation mismatch");
  const std::size_t len = u.size();
  GaugeRhs out;
  const Coeffs uk = power(u, static_cast<unsigned>(k));
  Coeffs g = uk;
  g[0] = 0.0;
  GaugeWeight lam = primitive_from_zero(g);
  for (auto& z : lam.periodic) z /= cplx{0.0, 2.0};
  const Coeffs e1 = exp_series(lam.periodic, 1.0);

  const Coeffs e1f = convolve(e1, frak);
  out.lu = convolve(uk, e1f);

  const Coeffs ukm1 = power(u, static_cast<unsigned>(k - 1));
  const Coeffs a = convolve(ukm1, e1f);  // u^{k-1} e^Lambda frak
  const Coeffs first = scaled(convolve(a, frak), static_cast<double>(k));
  const cplx point = point_value(a);
  Coeffs bracket_term = scaled(Coeffs(frak.begin(), frak.end()), point);
  if (k >= 2) {
    const Coeffs e2 = exp_series(lam.periodic, 2.0);
    const Coeffs integrand = convolve(convolve(power(u, static_cast<unsigned>(k - 2)), e2), convolve(frak, frak));
    const GaugeWeight prim = primitive_from_zero(integrand);
    out.secular_slope = prim.secular_slope;
    bracket_term = sum(bracket_term, scaled(convolve(prim.periodic, frak), static_cast<double>(k - 1)));
  }
  cplx u0 = point_value(u);
  cplx u0_2k = 1.0;
  for (int j = 0; j < 2 * k; ++j) u0_2k *= u0;
  out.lfrak.assign(len, cplx{});
  for (std::size_t n = 0; n < len; ++n)
    out.lfrak[n] = first[n] - 0.5 * static_cast<double>(k) * bracket_term[n] + u0_2k / (4.0 * kI) * frak[n];
  return out;
}

SpectralState compatible_psi(const SpectralState& phi, int k) {
  const Coeffs e = gauge_exp(gauge_lambda(phi, k), -1.0);
  return SpectralState(convolve(e, derivative_coeffs(phi.coeffs())), phi.time());
}

double gauge_identity_defect(const SpectralState& u, const SpectralState& frak, int k) {
  const SpectralState expected = compatible_psi(u, k);
  Coeffs d = expected.coeffs();
  for (std::size_t n = 0; n < d.size(); ++n) d[n] -= frak[n];
  return sobolev_norm(d, 0.0);
}

namespace {

double sup_h1(const std::vector<Coeffs>& a, const std::vector<Coeffs>& b) {
  double worst = 0.0;
  Coeffs d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d.resize(a[i].size());
    for (std::size_t n = 0; n < d.size(); ++n) d[n] = a[i][n] - b[i][n];
    worst = std::max(worst, sobolev_norm(d, 1.0));
  }
  return worst;
}

std::vector<Coeffs> transpose(const std::vector<Coeffs>& nodes, std::size_t modes) {
  std::vector<Coeffs> out(modes, Coeffs(nodes.size()));
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t n = 0; n < modes; ++n) out[n][i] = nodes[i][n];
  return out;
}

std::vector<Coeffs> resample(const quad::PanelGrid& from, const std::vector<Coeffs>& vals,
                             const quad::PanelGrid& to) {
  const std::size_t modes = vals.front().size();
  const auto by_mode = transpose(vals, modes);
  std::vector<Coeffs> out(to.node_count(), Coeffs(modes));
  const auto times = to.node_times();
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto [p, x] = from.locate(times[i]);
    for (std::size_t n = 0; n < modes; ++n)
      out[i][n] = quad::interpolate(std::span<const cplx>(by_mode[n]).subspan(p * quad::kNodes, quad::kNodes), x);
  }
  return out;
}

}  // namespace

GaugeResult gauge_picard_solve(const SpectralState& phi, const SpectralState& psi, int k, double T,
                               const GaugeOptions& options) {
  require(k >= 1, "gauge solver needs k >= 1");
  require(T > 0.0 && std::isfinite(T), "final time must be positive and finite");
  require(phi.truncation() == psi.truncation(), "phi and psi must share a truncation");
  require(phi[0] == cplx{} && psi[0] == cplx{}, "gauge solver needs mean-zero phi and psi");
  const double size = sobolev_norm(phi, 1.0) + sobolev_norm(psi, 1.0);
  if (size > options.smallness_threshold) {
    std::ostringstream os;
    os << "||phi||_H1 + ||psi||_H1 = " << size << " exceeds the gauge smallness threshold "
       << options.smallness_threshold;
    fail(ErrorCode::Domain, os.str());
  }
  const std::size_t M = phi.truncation();
  const EquationSpec spec = EquationSpec::pure_power(2.0, k);
  std::vector<double> mu(M + 1);
  for (std::size_t n = 0; n <= M; ++n) mu[n] = spec.symbol(static_cast<long long>(n));

  quad::PanelGrid grid = quad::PanelGrid::for_frequency(T, (k + 1) * mu[M], options.kappa);
  std::vector<Coeffs> zu(grid.node_count(), phi.coeffs());
  std::vector<Coeffs> zf(grid.node_count(), psi.coeffs());

  GaugeResult result;
  int iteration = 0;
  double prev = 0.0;

  // One application of the Duhamel maps in the frame zeta = e^{-i t n^2} u^.
  auto apply = [&](const std::vector<Coeffs>& cu, const std::vector<Coeffs>& cf, std::vector<Coeffs>& gu,
                   std::vector<Coeffs>& gf) {
    const auto times = grid.node_times();
    gu.assign(cu.size(), Coeffs(M + 1));
    gf.assign(cu.size(), Coeffs(M + 1));
    std::vector<double> slopes(cu.size(), 0.0);
    detail::parallel_for(cu.size(), [&](std::size_t b, std::size_t e) {
      Coeffs u(M + 1), f(M + 1);
      for (std::size_t i = b; i < e; ++i) {
        for (std::size_t n = 0; n <= M; ++n) {
          const cplx rot = std::polar(1.0, mu[n] * times[i]);
          u[n] = rot * cu[i][n];
          f[n] = rot * cf[i][n];
        }
        const GaugeRhs r = gauge_system_rhs(u, f, k);
        slopes[i] = std::abs(r.secular_slope);
        for (std::size_t n = 0; n <= M; ++n) {
          const cplx back = std::polar(1.0, -mu[n] * times[i]);
          gu[i][n] = back * r.lu[n];
          gf[i][n] = back * r.lfrak[n];
        }
      }
    });
    for (double s : slopes) result.max_secular_slope = std::max(result.max_secular_slope, s);
    if (result.max_secular_slope > options.slope_limit) {
      std::ostringstream os;
      os << "secular slope " << result.max_secular_slope << " in the (k-1) primitive term exceeds "
         << options.slope_limit << "; the frak_u equation leaves the periodic class";
      fail(ErrorCode::Domain, os.str());
    }
  };

  auto integrate = [&](const std::vector<Coeffs>& g, const SpectralState& data) {
    const auto by_mode = transpose(g, M + 1);
    std::vector<Coeffs> out(g.size(), Coeffs(M + 1));
    Coeffs integral(g.size());
    for (std::size_t n = 0; n <= M; ++n) {
      quad::cumulative_integral(grid, by_mode[n], integral, data[n]);
      for (std::size_t i = 0; i < g.size(); ++i) out[i][n] = integral[i];
    }
    return out;
  };

  std::vector<Coeffs> gu, gf;
  while (true) {
    bool done = false;
    while (!done) {
      if (iteration >= options.max_iter) {
        std::ostringstream os;
        os << "gauge Picard iteration hit max_iter = " << options.max_iter << " (last difference " << prev << ")";
        fail(ErrorCode::MaxIterations, os.str());
      }
      apply(zu, zf, gu, gf);
      auto nu = integrate(gu, phi);
      auto nf = integrate(gf, psi);
      const double diff = sup_h1(nu, zu) + sup_h1(nf, zf);
      ++iteration;
      GaugeLogRow row{iteration, diff, prev > 0.0 ? diff / prev : 0.0};
      result.log.push_back(row);
      double scale = 0.0;
      for (const auto& c : nu) scale = std::max(scale, sobolev_norm(c, 1.0));
      if (prev > 0.0 && row.ratio >= 1.0 && diff > 1e-14 * (1.0 + scale)) {
        std::ostringstream os;
        os << "gauge Picard map is not contracting: ratio " << row.ratio << " at iteration " << iteration
           << " with ||phi||_H1 + ||psi||_H1 = " << size;
        fail(ErrorCode::NonContraction, os.str());
      }
      zu = std::move(nu);
      zf = std::move(nf);
      prev = diff;
      done = diff <= options.tol;
    }

    apply(zu, zf, gu, gf);
    quad::RefinementTracker tracker(grid.panels());
    const auto gu_m = transpose(gu, M + 1), gf_m = transpose(gf, M + 1);
    const auto zu_m = transpose(zu, M + 1), zf_m = transpose(zf, M + 1);
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const double span = (k + 1) * mu[M] * T;
    for (std::size_t n = 1; n <= M; ++n) {
      const double w = std::max(1.0, mu[n]);
      for (int which = 0; which < 2; ++which) {
        const auto& g = which == 0 ? gu_m[n] : gf_m[n];
        const auto& z = which == 0 ? zu_m[n] : zf_m[n];
        const double gmax = quad::max_abs(g);
        if (gmax == 0.0) continue;
        const double scale = std::max(quad::max_abs(z), gmax / w);
        tracker.examine(grid, g, options.quad_tol * scale / T, n, eps * (100.0 + 10.0 * span) * gmax);
      }
    }
    if (!tracker.any()) break;
    if (result.refinements >= options.max_refinements) {
      std::ostringstream os;
      os << "gauge quadrature did not converge after " << result.refinements << " refinements; worst mode "
         << tracker.worst_mode;
      fail(ErrorCode::QuadratureNonconvergence, os.str());
    }
    auto finer = grid.refined(tracker.split);
    zu = resample(grid, zu, finer);
    zf = resample(grid, zf, finer);
    grid = std::move(finer);
    ++result.refinements;
    prev = 0.0;
  }

  std::vector<cplx> omega(mu.begin(), mu.end());
  auto pack = [&](const std::vector<Coeffs>& z) {
    auto by_mode = transpose(z, M + 1);
    for (auto& c : by_mode)
      if (quad::max_abs(c) == 0.0) c.clear();
    return by_mode;
  };
  result.u = Trajectory(spec, grid, omega, pack(zu), options.quad_tol);
  result.frak = Trajectory(spec, grid, omega, pack(zf), options.quad_tol);
  for (double t : grid.breaks())
    result.identity_defect.emplace_back(t, gauge_identity_defect(result.u.state_at(t), result.frak.state_at(t), k));
  return result;
}

namespace {

// Dual numbers over coefficient vectors: value + eps * derivative.
struct DualSeries {
  Coeffs v, d;
};

DualSeries dual_mul(const DualSeries& a, const DualSeries& b) {
  return {convolve(a.v, b.v), sum(convolve(a.d, b.v), convolve(a.v, b.d))};
}

DualSeries dual_exp(const DualSeries& a, double c) {
  DualSeries plus{a.v, a.d};
  const cplx v0 = a.v[0] * c, d0 = a.d[0] * c;
  plus.v[0] = 0.0;
  plus.d[0] = 0.0;
  for (auto& z : plus.v) z *= c;
  for (auto& z : plus.d) z *= c;
  const std::size_t len = a.v.size();
  DualSeries result{Coeffs(len), Coeffs(len)};
  result.v[0] = 1.0;
  DualSeries term = result;
  for (int j = 1; !(all_zero(term.v) && all_zero(term.d)); ++j) {
    term = dual_mul(term, plus);
    for (auto& z : term.v) z /= static_cast<double>(j);
    for (auto& z : term.d) z /= static_cast<double>(j);
    result.v = sum(result.v, term.v);
    result.d = sum(result.d, term.d);
  }
  const cplx e = std::exp(v0);
  DualSeries scale{Coeffs(len), Coeffs(len)};
  scale.v[0] = e;
  scale.d[0] = e * d0;
  return dual_mul(scale, result);
}

DualSeries eval_poly(const std::vector<Coeffs>& poly, double t) {
  require(!poly.empty(), "empty polynomial");
  const std::size_t len = poly.front().size();
  DualSeries out{Coeffs(len), Coeffs(len)};
  // Horner in the dual variable t + eps.
  for (auto it = poly.rbegin(); it != poly.rend(); ++it) {
    require(it->size() == len, "polynomial coefficients must share a truncation");
    Coeffs nv(len), nd(len);
    for (std::size_t n = 0; n < len; ++n) {
      nv[n] = out.v[n] * t + (*it)[n];
      nd[n] = out.d[n] * t + out.v[n];
    }
    out = {std::move(nv), std::move(nd)};
  }
  return out;
}

// L f = d_t f + i d_x^2 f for a dual series.
Coeffs apply_L(const DualSeries& f) {
  Coeffs out = f.d;
  const Coeffs fxx = second_derivative(f.v);
  for (std::size_t n = 0; n < out.size(); ++n) out[n] += kI * fxx[n];
  return out;
}

}  // namespace

double conjugation_identity_defect(const std::vector<Coeffs>& f_poly, const std::vector<Coeffs>& lambda_poly,
                                   double t) {
  const DualSeries f = eval_poly(f_poly, t);
  const DualSeries lam = eval_poly(lambda_poly, t);
  require(f.v.size() == lam.v.size(), "f and Lambda must share a truncation");

  const DualSeries g = dual_mul(dual_exp(lam, -1.0), f);
  const Coeffs lhs = convolve(exp_series(lam.v, 1.0), apply_L(g));

  const Coeffs lf = apply_L(f);
  const Coeffs llam = apply_L(lam);
  const Coeffs lam_x = derivative_coeffs(lam.v);
  const Coeffs f_x = derivative_coeffs(f.v);
  Coeffs potential = scaled(convolve(lam_x, lam_x), kI);
  for (std::size_t n = 0; n < potential.size(); ++n) potential[n] -= llam[n];
  const Coeffs rhs = sum(sum(lf, convolve(potential, f.v)), scaled(convolve(lam_x, f_x), -2.0 * kI));

  double worst = 0.0;
  for (std::size_t n = 0; n < lhs.size(); ++n) worst = std::max(worst, std::abs(lhs[n] - rhs[n]));
  return worst;
}

std::string gauge_log_csv(const std::vector<GaugeLogRow>& log) {
  std::ostringstream os;
  os << std::setprecision(17) << "iteration,sup_h1_diff,ratio\n";
  for (const auto& r : log) os << r.iteration << ',' << r.diff << ',' << r.ratio << '\n';
  return os.str();
}

}  // namespace halfline
