#include "halfline/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <limits>

#include "halfline/errors.hpp"

namespace halfline {

namespace {

using quad::kNodes;

struct Degree {
  int l;
  cplx lambda;
};

std::vector<Degree> active_degrees(const EquationSpec& spec) {
  std::vector<Degree> out;
  for (const auto& [l, lam] : spec.nonlin)
    if (lam != cplx{}) out.push_back({l, lam});
  return out;
}

// Node fields: one complex value per grid node; empty means identically zero.
using Field = Coeffs;

void accumulate_product(Field& acc, const Field& a, const Field& b) {
  if (a.empty() || b.empty()) return;
  if (acc.empty()) acc.assign(a.size(), cplx{});
  for (std::size_t i = 0; i < a.size(); ++i) acc[i] += a[i] * b[i];
}

void accumulate_scaled(Field& acc, cplx s, const Field& a) {
  if (a.empty() || s == cplx{}) return;
  if (acc.empty()) acc.assign(a.size(), cplx{});
  for (std::size_t i = 0; i < a.size(); ++i) acc[i] += s * a[i];
}

// One pass of the cascade on a fixed grid. Returns zeta_n at the nodes.
std::vector<Field> solve_on_grid(const SpectralState& phi, const EquationSpec& spec,
                                 const quad::PanelGrid& grid, double tol, quad::RefinementTracker* tracker) {
  const std::size_t M = phi.truncation();
  const std::size_t nodes = grid.node_count();
  const auto times = grid.node_times();
  const double T = grid.end();
  const cplx m0 = phi[0];
  const auto degrees = active_degrees(spec);
  int K = 0;
  for (const auto& d : degrees) K = std::max(K, d.l);

  std::vector<Field> zeta(M + 1);
  // a_m = exp(i mu(m) t) zeta_m: the mode in the dispersion-free frame.
  std::vector<Field> a(M + 1);
  // pw[j][n] = (a^j)^(n) for 2 <= j <= K; pw[1] aliases a.
  std::vector<std::vector<Field>> pw(static_cast<std::size_t>(std::max(K, 1)) + 1,
                                     std::vector<Field>(M + 1));
  if (m0 != cplx{}) {
    zeta[0].assign(nodes, m0);
    a[0] = zeta[0];
    for (int j = 2; j <= K; ++j) {
      cplx p = 1.0;
      for (int q = 0; q < j; ++q) p *= m0;
      pw[j][0].assign(nodes, p);
    }
  }
  auto power_field = [&](int j, std::size_t n) -> const Field& { return j == 1 ? a[n] : pw[j][n]; };

  std::vector<std::size_t> active;  // nonzero modes m >= 1 seen so far

  // Same recursion on sup norms: bounds the size of the individual terms
  // summed into the forcing, which sets its rounding level.
  std::vector<double> amp(M + 1, 0.0);
  std::vector<std::vector<double>> pw_amp(static_cast<std::size_t>(K) + 2, std::vector<double>(M + 1, 0.0));
  amp[0] = std::abs(m0);
  for (int j = 1; j <= K + 1; ++j) pw_amp[j][0] = std::pow(amp[0], j);
  std::vector<double> partial_amp(static_cast<std::size_t>(K) + 2);
  std::vector<Field> partial(static_cast<std::size_t>(K) + 2);

  for (std::size_t n = 1; n <= M; ++n) {
    // partial[j] = (a^j)^(n) with a_n set to zero.
    for (auto& f : partial) f.clear();
    for (int j = 2; j <= K + 1; ++j) {
      Field& acc = partial[j];
      if (m0 != cplx{}) accumulate_scaled(acc, m0, partial[j - 1]);
      for (std::size_t m : active) {
        if (m >= n) break;
        accumulate_product(acc, a[m], power_field(j - 1, n - m));
      }
    }

    partial_amp.assign(partial_amp.size(), 0.0);
    for (int j = 2; j <= K + 1; ++j) {
      double acc = amp[0] * partial_amp[j - 1];
      for (std::size_t m : active) {
        if (m >= n) break;
        acc += amp[m] * pw_amp[j - 1][n - m];
      }
      partial_amp[j] = acc;
    }
    double term_size = 0.0;
    for (const auto& d : degrees)
      if (d.l >= 1) term_size += static_cast<double>(n) * std::abs(d.lambda) / (d.l + 1) * partial_amp[d.l + 1];

    Field g;
    for (const auto& d : degrees) {
      if (d.l < 1) continue;
      const Field& p = partial[d.l + 1];
      if (p.empty()) continue;
      const cplx c = cplx{0.0, static_cast<double>(n)} * d.lambda / static_cast<double>(d.l + 1);
      accumulate_scaled(g, c, p);
    }

    if (!g.empty() || phi[n] != cplx{}) {
      Field z(nodes);
      if (!g.empty()) {
        const double mu = spec.symbol(static_cast<long long>(n));
        const cplx rate = spec.transport_rate(m0);
        for (std::size_t i = 0; i < nodes; ++i) g[i] *= std::polar(1.0, -mu * times[i]);
        quad::cumulative_integral(grid, g, z, phi[n]);
        if (tracker) {
          // Error is measured against max |zeta_n| or, when the Duhamel
          // integral largely cancels, against the size F/mu(n) a
          // non-resonant integral of the forcing terms would have.
          double scale = std::abs(phi[n]);
          for (const auto& v : z) scale = std::max(scale, std::abs(v));
          scale = std::max(scale, term_size / std::max(1.0, std::abs(mu) + std::abs(rate) * static_cast<double>(n)));
          // Rounding floor: the products carry phase factors exp(i mu t)
          // whose arguments are only accurate to eps * mu * t.
          const double phase_span = (std::abs(mu) + std::abs(rate.real()) * static_cast<double>(n)) * T;
          tracker->examine(grid, g, tol * scale / T, n,
                           std::numeric_limits<double>::epsilon() * (100.0 + 10.0 * phase_span) * term_size);
        }
      } else {
        std::fill(z.begin(), z.end(), phi[n]);
      }
      const double mu = spec.symbol(static_cast<long long>(n));
      Field an(nodes);
      for (std::size_t i = 0; i < nodes; ++i) an[i] = std::polar(1.0, mu * times[i]) * z[i];
      zeta[n] = std::move(z);
      a[n] = std::move(an);
      active.push_back(n);
      amp[n] = quad::max_abs(zeta[n]);
    }

    // Complete (a^j)^(n) with the terms containing a_n: j m0^(j-1) a_n.
    for (int j = 2; j <= K; ++j) {
      Field f = std::move(partial[j]);
      if (!a[n].empty()) {
        cplx coef = static_cast<double>(j);
        for (int q = 0; q < j - 1; ++q) coef *= m0;
        accumulate_scaled(f, coef, a[n]);
      }
      pw[j][n] = std::move(f);
    }
    pw_amp[1][n] = amp[n];
    for (int j = 2; j <= K + 1; ++j) pw_amp[j][n] = partial_amp[j] + j * std::pow(amp[0], j - 1) * amp[n];
  }
  return zeta;
}

}  // namespace

cplx nonlinear_forcing(const SpectralState& u, const EquationSpec& spec, std::size_t n) {
  require(n <= u.truncation(), "nonlinear_forcing: mode beyond truncation");
  const auto& c = u.coeffs();
  // Only entries <= n matter; truncating there keeps the cost at O(n^2).
  Coeffs prefix(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(n) + 1);
  if (prefix.size() < 2) prefix.push_back(0.0);
  cplx total{};
  for (const auto& d : active_degrees(spec)) {
    const Coeffs p = power(prefix, static_cast<unsigned>(d.l + 1));
    total += d.lambda * cplx{0.0, static_cast<double>(n)} / static_cast<double>(d.l + 1) * p[n];
  }
  return total;
}

std::vector<cplx> cascade_frequencies(const EquationSpec& spec, std::size_t truncation, cplx m0) {
  const cplx rate = spec.transport_rate(m0);
  std::vector<cplx> omega(truncation + 1);
  for (std::size_t n = 1; n <= truncation; ++n)
    omega[n] = spec.symbol(static_cast<long long>(n)) + static_cast<double>(n) * rate;
  return omega;
}

Trajectory cascade_integrate(const SpectralState& phi, const EquationSpec& spec, double T,
                             const CascadeOptions& options, CascadeDiagnostics* diag) {
  spec.validate();
  require(T > 0.0 && std::isfinite(T), "final time must be positive and finite");
  require(options.tol > 0.0, "quadrature tolerance must be positive");
  const std::size_t M = phi.truncation();

  quad::PanelGrid grid = options.grid ? *options.grid
                                      : quad::PanelGrid::for_frequency(T, spec.symbol(static_cast<long long>(M)),
                                                                       options.kappa);
  require(std::abs(grid.end() - T) <= 1e-12 * T && grid.start() == 0.0, "grid must span [0, T]");

  std::vector<Field> zeta;
  int refinements = 0;
  double worst = 0.0;
  std::size_t worst_mode = 0;
  while (true) {
    quad::RefinementTracker tracker(grid.panels());
    zeta = solve_on_grid(phi, spec, grid, options.tol, &tracker);
    worst = tracker.worst_excess;
    worst_mode = tracker.worst_mode;
    if (!options.adaptive || !tracker.any()) break;
    if (refinements >= options.max_refinements) {
      std::ostringstream os;
      os << "cascade quadrature did not reach tol " << options.tol << " after " << refinements
         << " refinements; worst mode " << worst_mode << " (error estimate " << worst << "x tolerance)";
      fail(ErrorCode::QuadratureNonconvergence, os.str());
    }
    grid = grid.refined(tracker.split);
    ++refinements;
  }

  Trajectory traj(spec, grid, cascade_frequencies(spec, M, phi[0]), std::move(zeta), options.tol);

  const double log_limit = std::log(options.overflow_limit);
  for (std::size_t n = 0; n <= M; ++n) {
    if (!traj.active(n)) continue;
    for (double t : grid.breaks()) {
      if (traj.log_abs_value_at(n, t) > log_limit) {
        std::ostringstream os;
        os << "mode " << n << " exceeds " << options.overflow_limit << " at t = " << t;
        fail(ErrorCode::Overflow, os.str());
      }
    }
  }

  if (diag) {
    diag->refinements = refinements;
    diag->panels = grid.panels();
    diag->worst_excess = worst;
    diag->worst_mode = worst_mode;
  }
  return traj;
}

SpectralState linear_transport(const SpectralState& phi, cplx lambda, double t) {
  Coeffs out = phi.coeffs();
  for (std::size_t n = 0; n < out.size(); ++n)
    out[n] *= std::exp(cplx{0.0, 1.0} * lambda * t * static_cast<double>(n));
  return SpectralState(std::move(out), phi.time() + t);
}

SpectralState linear_solve(const SpectralState& phi, const EquationSpec& spec, cplx lambda, double t) {
  Coeffs out = phi.coeffs();
  for (std::size_t n = 0; n < out.size(); ++n) {
    const cplx w = spec.symbol(static_cast<long long>(n)) + lambda * static_cast<double>(n);
    out[n] *= std::exp(cplx{0.0, 1.0} * w * t);
  }
  return SpectralState(std::move(out), phi.time() + t);
}

Trajectory single_mode_trajectory(const EquationSpec& spec, std::size_t truncation, cplx c, cplx a,
                                  std::size_t N, double T, double kappa) {
  require(N >= 1 && N <= truncation, "carrier mode must lie in [1, M]");
  const auto omega = cascade_frequencies(spec, truncation, c);
  const double fastest = std::abs(omega[N].real()) + spec.symbol(static_cast<long long>(truncation));
  quad::PanelGrid grid = quad::PanelGrid::for_frequency(T, fastest, kappa);
  std::vector<Coeffs> zeta(truncation + 1);
  if (c != cplx{}) zeta[0].assign(grid.node_count(), c);
  if (a != cplx{}) zeta[N].assign(grid.node_count(), a);
  return Trajectory(spec, std::move(grid), omega, std::move(zeta), 0.0);
}

EquationSpec mean_zero_spec(const EquationSpec& spec, cplx m0) {
  EquationSpec w;
  w.alpha = spec.alpha;
  w.dispersion = spec.dispersion;
  for (const auto& [l, lam] : spec.nonlin) {
    if (lam == cplx{}) continue;
    double binom = 1.0;
    for (int j = 1; j <= l; ++j) {
      binom = binom * static_cast<double>(l - j + 1) / static_cast<double>(j);
      cplx term = lam * binom;
      for (int q = 0; q < l - j; ++q) term *= m0;
      w.nonlin[j] += term;
    }
  }
  return w;
}

SpectralState mean_zero_transform(const SpectralState& u, const EquationSpec& spec, cplx m0) {
  const cplx rate = spec.transport_rate(m0);
  Coeffs out = u.coeffs();
  const double t = u.time();
  for (std::size_t n = 1; n < out.size(); ++n)
    out[n] *= std::exp(cplx{0.0, -1.0} * rate * t * static_cast<double>(n));
  out[0] -= m0;
  return SpectralState(std::move(out), t);
}

SpectralState inverse_mean_zero_transform(const SpectralState& w, const EquationSpec& spec, cplx m0) {
  const cplx rate = spec.transport_rate(m0);
  Coeffs out = w.coeffs();
  const double t = w.time();
  for (std::size_t n = 1; n < out.size(); ++n)
    out[n] *= std::exp(cplx{0.0, 1.0} * rate * t * static_cast<double>(n));
  out[0] += m0;
  return SpectralState(std::move(out), t);
}

Trajectory mean_zero_transform(const Trajectory& u, cplx m0) {
  const cplx rate = u.spec().transport_rate(m0);
  std::vector<cplx> omega = u.omegas();
  for (std::size_t n = 1; n < omega.size(); ++n) omega[n] -= static_cast<double>(n) * rate;
  return u.retuned(std::move(omega), -m0, mean_zero_spec(u.spec(), m0));
}

Trajectory inverse_mean_zero_transform(const Trajectory& w, const EquationSpec& u_spec, cplx m0) {
  const cplx rate = u_spec.transport_rate(m0);
  std::vector<cplx> omega = w.omegas();
  for (std::size_t n = 1; n < omega.size(); ++n) omega[n] += static_cast<double>(n) * rate;
  return w.retuned(std::move(omega), m0, u_spec);
}

TimeWindow TimeWindow::quadratic(double T) {
  return {"quadratic", [T](double t) { return (1.0 - t / T) * (1.0 - t / T); },
          [T](double t) { return -2.0 * (1.0 - t / T) / T; }};
}

TimeWindow TimeWindow::cosine(double T) {
  const double k = std::numbers::pi / (2.0 * T);
  return {"cosine", [k](double t) { return std::cos(k * t) * std::cos(k * t); },
          [k](double t) { return -2.0 * k * std::cos(k * t) * std::sin(k * t); }};
}

TimeWindow TimeWindow::cubic_exponential(double T) {
  return {"cubic_exponential",
          [T](double t) {
            const double s = 1.0 - t / T;
            return s * s * s * std::exp(t / T);
          },
          [T](double t) {
            const double s = 1.0 - t / T;
            return (-3.0 * s * s + s * s * s) * std::exp(t / T) / T;
          }};
}

cplx weak_residual(const Trajectory& traj, std::size_t m, const TimeWindow& theta) {
  const std::size_t M = traj.truncation();
  require(m <= M, "test mode beyond truncation");
  const double T = traj.final_time();
  require(std::abs(theta.value(T)) <= 1e-14, "time window must vanish at T");
  const auto& spec = traj.spec();
  const auto& grid = traj.grid();

  // The stored frame values must themselves be resolved on their panels.
  for (std::size_t n = 0; n <= M; ++n) {
    if (!traj.active(n)) continue;
    const auto& z = traj.frame_values(n);
    double scale = 0.0;
    for (const auto& v : z) scale = std::max(scale, std::abs(v));
    for (std::size_t p = 0; p < grid.panels(); ++p) {
      auto zp = std::span<const cplx>(z).subspan(p * kNodes, kNodes);
      if (quad::chebyshev_tail(zp) > 1e-9 * scale)
        fail(ErrorCode::QuadratureNonconvergence,
             "weak_residual: insufficient sampling density (mode " + std::to_string(n) + ", panel " +
                 std::to_string(p) + ")");
    }
  }

  // Highest oscillation rate of u^(t, n): frame rotation plus what zeta may carry.
  double fastest = 0.0;
  for (std::size_t n = 0; n <= M; ++n)
    if (traj.active(n)) fastest = std::max(fastest, std::abs(traj.omega(n).real()));
  fastest += spec.symbol(static_cast<long long>(M));

  std::vector<long double> gx, gw;
  quad::gauss_legendre(20, gx, gw);
  const auto degrees = active_degrees(spec);
  const double mu_m = spec.symbol(static_cast<long long>(m));

  cplx int_dtheta{}, int_theta{}, int_nonlin{};
  for (std::size_t p = 0; p < grid.panels(); ++p) {
    const double a = grid.left(p), h = grid.width(p);
    const auto sub = static_cast<std::size_t>(std::max(1.0, std::ceil(h * fastest / 3.0)));
    const double hs = h / static_cast<double>(sub);
    for (std::size_t s = 0; s < sub; ++s) {
      const double left = a + hs * static_cast<double>(s);
      for (std::size_t q = 0; q < gx.size(); ++q) {
        const double t = left + 0.5 * hs * (static_cast<double>(gx[q]) + 1.0);
        const double w = 0.5 * hs * static_cast<double>(gw[q]);
        const SpectralState u = traj.state_at(t);
        const cplx um = u[m];
        int_dtheta += w * theta.derivative(t) * um;
        int_theta += w * theta.value(t) * um;
        cplx nl{};
        if (m > 0) {
          for (const auto& d : degrees) {
            const Coeffs pw = power(u.coeffs(), static_cast<unsigned>(d.l + 1));
            nl += d.lambda * cplx{0.0, static_cast<double>(m)} / static_cast<double>(d.l + 1) * pw[m];
          }
        }
        int_nonlin += w * theta.value(t) * nl;
      }
    }
  }
  const cplx phi_m = traj.value_at(m, 0.0);
  return -int_dtheta - theta.value(0.0) * phi_m - cplx{0.0, 1.0} * mu_m * int_theta - int_nonlin;
}

}  // namespace halfline
