#include "halfline/normal_form.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <functional>
#include <limits>
#include <sstream>

#include "halfline/errors.hpp"
#include "halfline/phase.hpp"
#include "parallel.hpp"

namespace halfline {

namespace {

void enumerate_tuples(std::size_t n, int parts, const std::vector<char>& mask, std::vector<std::uint64_t>& cur,
                      const std::function<void(const std::vector<std::uint64_t>&)>& emit) {
  if (parts == 1) {
    if (n >= 1 && (mask.empty() || mask[n])) {
      cur.push_back(n);
      emit(cur);
      cur.pop_back();
    }
    return;
  }
  for (std::size_t first = 1; first + static_cast<std::size_t>(parts - 1) <= n; ++first) {
    if (!mask.empty() && !mask[first]) continue;
    cur.push_back(first);
    enumerate_tuples(n - first, parts - 1, mask, cur, emit);
    cur.pop_back();
  }
}

double sup_h1_difference(const std::vector<Coeffs>& a, const std::vector<Coeffs>& b) {
  double worst = 0.0;
  Coeffs d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d.resize(a[i].size());
    for (std::size_t n = 0; n < d.size(); ++n) d[n] = a[i][n] - b[i][n];
    worst = std::max(worst, sobolev_norm(d, 1.0));
  }
  return worst;
}

double sup_h1(const std::vector<Coeffs>& a) {
  double worst = 0.0;
  for (const auto& c : a) worst = std::max(worst, sobolev_norm(c, 1.0));
  return worst;
}

// Mode-major copy of node-major values.
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

NormalFormOperators::NormalFormOperators(EquationSpec spec, std::size_t truncation, std::vector<char> support)
    : spec_(std::move(spec)), M_(truncation) {
  spec_.validate();
  require(M_ >= 1, "normal form needs truncation M >= 1");
  require(spec_.coeff(0) == cplx{}, "normal form requires lambda_0 = 0 (no linear transport term)");
  require(support.empty() || support.size() == M_ + 1, "support mask must cover modes 0..M");
  min_phase_ = std::numeric_limits<double>::infinity();
  for (const auto& [l, lam] : spec_.nonlin) {
    if (lam == cplx{}) continue;
    Table tab;
    tab.l = l;
    tab.lambda = lam;
    tab.idx.resize(M_ + 1);
    tab.phase.resize(M_ + 1);
    std::vector<std::uint64_t> cur;
    for (std::size_t n = 2; n <= M_; ++n) {
      if (!support.empty() && !support[n]) continue;
      enumerate_tuples(n, l + 1, support, cur, [&](const std::vector<std::uint64_t>& t) {
        const double ph = phase(spec_.alpha, t);
        if (ph == 0.0)
          fail(ErrorCode::Domain, "resonant tuple (zero phase) in normal form table; alpha must exceed 1");
        min_phase_ = std::min(min_phase_, std::abs(ph));
        for (auto x : t) tab.idx[n].push_back(static_cast<std::uint32_t>(x));
        tab.phase[n].push_back(ph);
      });
    }
    tables_.push_back(std::move(tab));
  }
  if (!std::isfinite(min_phase_)) min_phase_ = 0.0;
}

std::size_t NormalFormOperators::table_size() const noexcept {
  std::size_t total = 0;
  for (const auto& tab : tables_)
    for (const auto& p : tab.phase) total += p.size();
  return total;
}

Coeffs NormalFormOperators::rhs(std::span<const cplx> v, double t) const {
  require(v.size() == M_ + 1, "normal form: truncation mismatch");
  Coeffs out(M_ + 1);
  for (const auto& tab : tables_) {
    const std::size_t L = static_cast<std::size_t>(tab.l) + 1;
    const cplx c = tab.lambda / static_cast<double>(L);
    for (std::size_t n = 2; n <= M_; ++n) {
      const auto& idx = tab.idx[n];
      const auto& ph = tab.phase[n];
      cplx acc{};
      for (std::size_t q = 0; q < ph.size(); ++q) {
        cplx prod = std::polar(1.0, t * ph[q]);
        for (std::size_t j = 0; j < L; ++j) prod *= v[idx[q * L + j]];
        acc += prod;
      }
      out[n] += cplx{0.0, static_cast<double>(n)} * c * acc;
    }
  }
  return out;
}

void NormalFormOperators::evaluate(std::span<const cplx> v, double t, Coeffs& n_out, Coeffs& b_out) const {
  require(v.size() == M_ + 1, "normal form: truncation mismatch");
  const Coeffs d = rhs(v, t);
  n_out.assign(M_ + 1, cplx{});
  b_out.assign(M_ + 1, cplx{});
  for (const auto& tab : tables_) {
    const std::size_t L = static_cast<std::size_t>(tab.l) + 1;
    for (std::size_t n = 2; n <= M_; ++n) {
      const auto& idx = tab.idx[n];
      const auto& ph = tab.phase[n];
      cplx acc_n{}, acc_b{};
      for (std::size_t q = 0; q < ph.size(); ++q) {
        const cplx e = std::polar(1.0, t * ph[q]) / ph[q];
        cplx head = e;
        for (std::size_t j = 0; j + 1 < L; ++j) head *= v[idx[q * L + j]];
        const std::uint32_t last = idx[q * L + L - 1];
        acc_n += head * v[last];
        acc_b += head * d[last];
      }
      const double nn = static_cast<double>(n);
      n_out[n] += nn * tab.lambda / static_cast<double>(L) * acc_n;
      b_out[n] -= nn * tab.lambda * acc_b;
    }
  }
}

Coeffs NormalFormOperators::calN(std::span<const cplx> v, double t) const {
  Coeffs n_out, b_out;
  evaluate(v, t, n_out, b_out);
  return n_out;
}

Coeffs NormalFormOperators::calB(std::span<const cplx> v, double t) const {
  Coeffs n_out, b_out;
  evaluate(v, t, n_out, b_out);
  return b_out;
}

SmallnessCheck smallness_check(const EquationSpec& spec, const SpectralState& phi) {
  SmallnessCheck out;
  const std::size_t M = phi.truncation();
  double c1 = 0.0;
  for (std::size_t n = 1; n <= M; ++n) c1 += 1.0 / (1.0 + static_cast<double>(n * n));
  c1 = std::sqrt(c1);
  const double r = sobolev_norm(phi, 1.0);
  const double am1 = spec.alpha - 1.0;
  out.phi_norm_H1 = r;
  out.radius = 2.0 * r;
  double bound = r;
  for (const auto& [l, lam] : spec.nonlin) {
    if (lam == cplx{}) continue;
    const double cn = std::abs(lam) * std::sqrt(2.0) * (l + 1) * std::pow(c1, l) / am1;
    out.c_N = std::max(out.c_N, cn);
    bound += cn * (std::pow(2.0 * r, l + 1) + std::pow(r, l + 1));
    for (const auto& [l2, lam2] : spec.nonlin) {
      if (lam2 == cplx{}) continue;
      const double cb = std::abs(lam * lam2) * (l + 1) / ((l2 + 1) * am1) * (l + l2 + 1) * std::pow(c1, l + l2);
      out.c_B = std::max(out.c_B, cb);
      bound += cb * std::pow(2.0 * r, l + l2 + 1);
    }
  }
  out.lhs = bound;
  out.holds = r == 0.0 || bound < 2.0 * r;
  return out;
}

std::vector<Coeffs> gamma_map(const NormalFormOperators& ops, const quad::PanelGrid& grid,
                              const std::vector<Coeffs>& v, const SpectralState& phi) {
  const std::size_t M = ops.truncation();
  require(phi.truncation() == M, "gamma_map: truncation mismatch");
  require(v.size() == grid.node_count(), "gamma_map: node count mismatch");
  const auto times = grid.node_times();
  std::vector<Coeffs> nv(v.size()), bv(v.size());
  detail::parallel_for(v.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) ops.evaluate(v[i], times[i], nv[i], bv[i]);
  });
  const Coeffs n_phi = ops.calN(phi.coeffs(), 0.0);

  std::vector<Coeffs> out(v.size(), Coeffs(M + 1));
  Coeffs g(v.size()), integral(v.size());
  for (std::size_t n = 0; n <= M; ++n) {
    bool any = false;
    for (std::size_t i = 0; i < v.size(); ++i) {
      g[i] = bv[i][n];
      any = any || g[i] != cplx{};
    }
    if (any)
      quad::cumulative_integral(grid, g, integral);
    else
      std::fill(integral.begin(), integral.end(), cplx{});
    for (std::size_t i = 0; i < v.size(); ++i) out[i][n] = phi[n] + nv[i][n] - n_phi[n] + integral[i];
  }
  return out;
}

PicardResult picard_solve(const SpectralState& phi, const EquationSpec& spec, double T,
                          const PicardOptions& options) {
  spec.validate();
  require(T > 0.0 && std::isfinite(T), "final time must be positive and finite");
  require(options.tol > 0.0 && options.max_iter >= 1, "invalid Picard tolerance or iteration cap");
  if (!(spec.alpha >= 3.0)) {
    if (!options.allow_unsafe_alpha)
      fail(ErrorCode::Domain, "normal-form Picard needs alpha >= 3 (pass the unsafe flag to try smaller alpha)");
    require(spec.alpha > 1.0, "normal form needs alpha > 1");
  }
  require(phi[0] == cplx{}, "normal-form data must be mean-zero (phi^(0) = 0)");
  const std::size_t M = phi.truncation();

  std::vector<std::size_t> gens;
  for (std::size_t n = 1; n <= M; ++n)
    if (phi[n] != cplx{}) gens.push_back(n);
  std::vector<char> mask(M + 1, 0);
  for (auto n : support_semigroup(gens, M)) mask[n] = 1;

  PicardResult result;
  result.smallness = smallness_check(spec, phi);
  const NormalFormOperators ops(spec, M, mask);

  quad::PanelGrid grid = options.grid ? *options.grid
                                      : quad::PanelGrid::for_frequency(T, spec.symbol(static_cast<long long>(M)),
                                                                       options.kappa);
  require(std::abs(grid.end() - T) <= 1e-12 * T && grid.start() == 0.0, "grid must span [0, T]");

  std::vector<Coeffs> v(grid.node_count(), phi.coeffs());
  const double phi_h1 = sobolev_norm(phi, 1.0);
  int iteration = 0;
  double prev = 0.0;

  while (true) {
    bool done = false;
    while (!done) {
      if (iteration >= options.max_iter) {
        std::ostringstream os;
        os << "Picard iteration hit max_iter = " << options.max_iter << " (last difference " << prev
           << ", ||phi||_H1 = " << phi_h1 << ")";
        fail(ErrorCode::MaxIterations, os.str());
      }
      auto next = gamma_map(ops, grid, v, phi);
      const double diff = sup_h1_difference(next, v);
      ++iteration;
      PicardLogRow row{iteration, diff, prev > 0.0 ? diff / prev : 0.0};
      result.log.push_back(row);
      const double noise = 1e-14 * (1.0 + sup_h1(next));
      if (prev > 0.0 && row.ratio >= 1.0 && diff > noise) {
        std::ostringstream os;
        os << "Picard map is not contracting: ratio " << row.ratio << " at iteration " << iteration
           << " with ||phi||_H1 = " << phi_h1;
        fail(ErrorCode::NonContraction, os.str());
      }
      v = std::move(next);
      prev = diff;
      done = diff <= options.tol;
    }

    // Converged on this grid; check that the B integrand is resolved.
    quad::RefinementTracker tracker(grid.panels());
    const auto times = grid.node_times();
    std::vector<Coeffs> bv(v.size()), nv(v.size());
    detail::parallel_for(v.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) ops.evaluate(v[i], times[i], nv[i], bv[i]);
    });
    const auto b_modes = transpose(bv, M + 1);
    const auto v_modes = transpose(v, M + 1);
    for (std::size_t n = 1; n <= M; ++n) {
      if (!mask[n]) continue;
      const double mu = spec.symbol(static_cast<long long>(n));
      const double gmax = quad::max_abs(b_modes[n]);
      const double scale = std::max(quad::max_abs(v_modes[n]), gmax / mu);
      tracker.examine(grid, b_modes[n], options.quad_tol * scale / T, n,
                      std::numeric_limits<double>::epsilon() * (100.0 + 10.0 * mu * T) * gmax);
    }
    if (!tracker.any()) break;
    if (result.refinements >= options.max_refinements) {
      std::ostringstream os;
      os << "normal-form quadrature did not converge after " << result.refinements << " refinements; worst mode "
         << tracker.worst_mode;
      fail(ErrorCode::QuadratureNonconvergence, os.str());
    }
    auto finer = grid.refined(tracker.split);
    v = resample(grid, v, finer);
    grid = std::move(finer);
    ++result.refinements;
    prev = 0.0;
  }

  result.fixed_point_residual = sup_h1_difference(gamma_map(ops, grid, v, phi), v);
  result.converged = true;

  std::vector<cplx> omega(M + 1);
  for (std::size_t n = 0; n <= M; ++n) omega[n] = spec.symbol(static_cast<long long>(n));
  auto by_mode = transpose(v, M + 1);
  for (std::size_t n = 0; n <= M; ++n)
    if (!mask[n] || quad::max_abs(by_mode[n]) == 0.0) by_mode[n].clear();
  result.v = Trajectory(spec, std::move(grid), std::move(omega), std::move(by_mode), options.quad_tol);
  return result;
}

std::string picard_log_csv(const std::vector<PicardLogRow>& log) {
  std::ostringstream os;
  os << std::setprecision(17) << "iteration,sup_h1_diff,ratio\n";
  for (const auto& r : log) os << r.iteration << ',' << r.diff << ',' << r.ratio << '\n';
  return os.str();
}

nlohmann::json to_json(const SmallnessCheck& c) {
  return {{"holds", c.holds}, {"phi_norm_H1", c.phi_norm_H1}, {"ball_bound", c.lhs},
          {"ball_radius", c.radius}, {"C_N", c.c_N}, {"C_B", c.c_B}};
}

}  // namespace halfline
