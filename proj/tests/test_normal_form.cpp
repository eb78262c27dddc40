#include <doctest.h>

#include <cmath>
#include <functional>

#include "halfline/cascade.hpp"
#include "halfline/errors.hpp"
#include "halfline/normal_form.hpp"
#include "halfline/phase.hpp"
#include "support.hpp"

using namespace halfline;
using namespace testing;

namespace {

double phi_of(double alpha, const std::vector<std::size_t>& t) {
  double s = 0.0, p = 0.0;
  for (auto n : t) {
    s += double(n);
    p += std::pow(double(n), alpha);
  }
  return p - std::pow(s, alpha);
}

// Calls f(tuple) for every ordered tuple of `parts` positive integers summing to n.
void compositions(std::size_t n, int parts, const std::function<void(const std::vector<std::size_t>&)>& f) {
  std::vector<std::size_t> t;
  std::function<void(std::size_t, int)> rec = [&](std::size_t rest, int left) {
    if (left == 1) {
      t.push_back(rest);
      f(t);
      t.pop_back();
      return;
    }
    for (std::size_t m = 1; m + left - 1 <= rest; ++m) {
      t.push_back(m);
      rec(rest - m, left - 1);
      t.pop_back();
    }
  };
  if (n >= std::size_t(parts)) rec(n, parts);
}

// d_t v^(n) = i n sum_l lambda_l/(l+1) sum e^{i t Phi} prod v
Coeffs rhs_oracle(const Coeffs& v, const EquationSpec& spec, double t) {
  Coeffs out(v.size());
  for (std::size_t n = 1; n < v.size(); ++n)
    for (const auto& [l, lam] : spec.nonlin)
      compositions(n, l + 1, [&](const std::vector<std::size_t>& tu) {
        cplx prod = lam / double(l + 1) * cplx(0.0, double(n)) * std::exp(cplx(0.0, t * phi_of(spec.alpha, tu)));
        for (auto m : tu) prod *= v[m];
        out[n] += prod;
      });
  return out;
}

Coeffs calN_oracle(const Coeffs& v, const EquationSpec& spec, double t) {
  Coeffs out(v.size());
  for (std::size_t n = 1; n < v.size(); ++n)
    for (const auto& [l, lam] : spec.nonlin)
      compositions(n, l + 1, [&](const std::vector<std::size_t>& tu) {
        const double ph = phi_of(spec.alpha, tu);
        cplx prod = lam * double(n) / double(l + 1) * std::exp(cplx(0.0, t * ph)) / ph;
        for (auto m : tu) prod *= v[m];
        out[n] += prod;
      });
  return out;
}

// The time derivative of calN with d_t falling only on the v factors.
Coeffs calB_oracle(const Coeffs& v, const EquationSpec& spec, double t) {
  const Coeffs d = rhs_oracle(v, spec, t);
  Coeffs out(v.size());
  for (std::size_t n = 1; n < v.size(); ++n)
    for (const auto& [l, lam] : spec.nonlin)
      compositions(n, l + 1, [&](const std::vector<std::size_t>& tu) {
        const double ph = phi_of(spec.alpha, tu);
        for (int slot = 0; slot <= l; ++slot) {
          cplx prod = -lam * double(n) / double(l + 1) * std::exp(cplx(0.0, t * ph)) / ph;
          for (int j = 0; j <= l; ++j) prod *= j == slot ? d[tu[j]] : v[tu[j]];
          out[n] += prod;
        }
      });
  return out;
}

SpectralState desk_phi(double scale = 1.0) {
  Coeffs c(17);
  c[1] = 0.05 * scale;
  c[2] = 0.05 * scale;
  return SpectralState(c);
}

}  // namespace

TEST_CASE("calN: worked examples") {
  for (double alpha : {3.0, 4.0}) {
    const auto spec = EquationSpec::pure_power(alpha, 1);
    const NormalFormOperators ops(spec, 6);
    const cplx a{0.3, -0.4};
    const double t = 0.37;
    const Coeffs n1 = ops.calN(delta(6, 1, a), t);
    const double ph = 2.0 - std::pow(2.0, alpha);
    CHECK(std::abs(n1[2] - std::exp(cplx(0.0, t * ph)) / ph * a * a) <= 1e-15);
    CHECK(n1[1] == cplx{});
    CHECK(max_abs(ops.calN(Coeffs(7), t)) == 0.0);
    CHECK(ops.calN(random_coeffs(6, 1.0, 1), t)[1] == cplx{});
    CHECK(ops.min_abs_phase() > 0.0);
  }
}

TEST_CASE("calB: hand enumeration for a single mode") {
  const auto spec = EquationSpec::pure_power(3.0, 1);
  const NormalFormOperators ops(spec, 5);
  const cplx a{0.2, 0.1};
  const double t = 0.6;
  const Coeffs b = ops.calB(delta(5, 1, a), t);
  CHECK(b[1] == cplx{});
  CHECK(b[2] == cplx{});
  // outer (1, 2) with the derivative on mode 2, fed by (1, 1)
  const double p12 = phi_of(3.0, {1, 2}), p11 = phi_of(3.0, {1, 1});
  const cplx d2 = cplx(0.0, 1.0) * std::exp(cplx(0.0, t * p11)) * a * a;
  const cplx want3 = -3.0 * std::exp(cplx(0.0, t * p12)) / p12 * a * d2;
  CHECK(std::abs(b[3] - want3) <= 1e-15);
  CHECK(max_abs(ops.calB(Coeffs(6), t)) == 0.0);
}

TEST_CASE("operators match brute-force oracles on random data") {
  for (int trial = 0; trial < 12; ++trial) {
    EquationSpec spec;
    spec.alpha = double(uniform_int(3, 5)) + (trial % 3 == 0 ? 0.5 : 0.0);
    spec.nonlin.clear();
    spec.nonlin[uniform_int(1, 2)] = {uniform(-1, 1), uniform(-1, 1)};
    if (trial % 2) spec.nonlin[3] = {uniform(-1, 1), 0.0};
    const std::size_t M = static_cast<std::size_t>(uniform_int(3, 8));
    const NormalFormOperators ops(spec, M);
    const Coeffs v = random_coeffs(M, 0.5, 1);
    const double t = uniform(0, 2);
    const double tol = 1e-12;
    CHECK(max_diff(ops.rhs(v, t), rhs_oracle(v, spec, t)) <= tol * (1 + max_abs(rhs_oracle(v, spec, t))));
    CHECK(max_diff(ops.calN(v, t), calN_oracle(v, spec, t)) <= tol * (1 + max_abs(calN_oracle(v, spec, t))));
    CHECK(max_diff(ops.calB(v, t), calB_oracle(v, spec, t)) <= tol * (1 + max_abs(calB_oracle(v, spec, t))));
    Coeffs n_out, b_out;
    ops.evaluate(v, t, n_out, b_out);
    CHECK(max_diff(n_out, ops.calN(v, t)) <= 1e-15 * (1 + max_abs(n_out)));
    CHECK(max_diff(b_out, ops.calB(v, t)) <= 1e-15 * (1 + max_abs(b_out)));
  }
}

TEST_CASE("rhs is the cascade forcing seen in the interaction picture") {
  const auto spec = EquationSpec::pure_power(3.0, 2);
  const std::size_t M = 9;
  const NormalFormOperators ops(spec, M);
  const Coeffs v = random_coeffs(M, 0.3, 1);
  const double t = 0.45;
  const SpectralState u = dispersion_apply(SpectralState(v), spec, t);
  const Coeffs r = ops.rhs(v, t);
  for (std::size_t n = 1; n <= M; ++n) {
    const cplx want = std::exp(cplx(0.0, -t * spec.symbol(long(n)))) * nonlinear_forcing(u, spec, n);
    CHECK(std::abs(r[n] - want) <= 1e-14 * (1 + std::abs(want)));
  }
}

TEST_CASE("support mask drops only vanishing tuples") {
  const auto spec = EquationSpec::pure_power(3.0, 1);
  const std::size_t M = 20;
  const std::vector<std::size_t> gens{3, 5};
  const auto S = support_semigroup(gens, M);
  std::vector<char> mask(M + 1, 0);
  for (auto n : S) mask[n] = 1;
  const NormalFormOperators full(spec, M), masked(spec, M, mask);
  CHECK(masked.table_size() < full.table_size());
  Coeffs v(M + 1);
  for (auto n : S) v[n] = {uniform(-0.1, 0.1), uniform(-0.1, 0.1)};
  CHECK(max_diff(full.calN(v, 0.3), masked.calN(v, 0.3)) <= 1e-15);
  CHECK(max_diff(full.calB(v, 0.3), masked.calB(v, 0.3)) <= 1e-15);
}

TEST_CASE("estimates: homogeneity and the Young-type constants") {
  for (int k : {1, 2}) {
    const auto spec = EquationSpec::pure_power(3.0, k);
    const std::size_t M = 10;
    const NormalFormOperators ops(spec, M);
    const auto sc = smallness_check(spec, SpectralState(Coeffs(M + 1)));
    for (int trial = 0; trial < 20; ++trial) {
      const Coeffs v = random_coeffs(M, uniform(1e-3, 0.2), 1);
      const double t = uniform(0, 1);
      const double r = sobolev_norm(v, 1.0);
      CHECK(sobolev_norm(ops.calN(v, t), 1.0) <= sc.c_N * std::pow(r, k + 1));
      CHECK(sobolev_norm(ops.calB(v, t), 1.0) <= sc.c_B * std::pow(r, 2 * k + 1));
      Coeffs half = v;
      for (auto& x : half) x *= 0.5;
      CHECK(max_diff(ops.calN(half, t), [&] {
              Coeffs n = ops.calN(v, t);
              for (auto& x : n) x *= std::pow(0.5, k + 1);
              return n;
            }()) <= 1e-15);
    }
  }
}

TEST_CASE("gamma_map: constant trajectory and zero data") {
  const auto spec = EquationSpec::pure_power(3.0, 1);
  const SpectralState phi = desk_phi();
  const std::size_t M = phi.truncation();
  const NormalFormOperators ops(spec, M);
  const quad::PanelGrid grid = quad::PanelGrid::for_frequency(1.0, std::pow(double(M), 3.0), 6.0);
  const std::vector<Coeffs> v(grid.node_count(), phi.coeffs());
  const auto g = gamma_map(ops, grid, v, phi);
  // At t = 0 the boundary terms cancel.
  CHECK(max_diff(g[0], phi.coeffs()) <= 1e-16);
  // Anywhere else: phi + N(phi)(t) - N(phi)(0) + int B(phi).
  const std::size_t last = grid.node_count() - 1;
  const Coeffs nT = ops.calN(phi.coeffs(), 1.0), n0 = ops.calN(phi.coeffs(), 0.0);
  const Coeffs gT = g[last];
  // int_0^1 B(phi)(t) dt on mode 3 by composite Simpson; its phases are small.
  cplx integral{};
  const int steps = 20000;
  for (int i = 0; i <= steps; ++i) {
    const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    integral += w * ops.calB(phi.coeffs(), double(i) / steps)[3];
  }
  integral /= 3.0 * steps;
  CHECK(std::abs(gT[3] - (phi[3] + nT[3] - n0[3] + integral)) <= 1e-9 * std::abs(gT[3]) + 1e-15);

  const SpectralState zero(Coeffs(M + 1));
  const auto gz = gamma_map(ops, grid, v, zero);
  for (std::size_t i = 0; i < gz.size(); ++i) CHECK(std::abs(gz[i][1]) == 0.0);
}

TEST_CASE("picard_solve: zero data converges at once") {
  const auto res = picard_solve(SpectralState(Coeffs(9)), EquationSpec::pure_power(3.0, 1), 1.0);
  CHECK(res.converged);
  CHECK(res.log.size() == 1);
  CHECK(res.log.front().diff == 0.0);
}

TEST_CASE("picard_solve: desk instance agrees with the cascade") {
  const auto spec = EquationSpec::pure_power(3.0, 1);
  const SpectralState phi = desk_phi();
  const auto res = picard_solve(phi, spec, 1.0);
  REQUIRE(res.converged);
  CHECK(res.fixed_point_residual <= 10.0 * 1e-12);
  const Trajectory tr = cascade_integrate(phi, spec, 1.0, CascadeOptions{.tol = 1e-12});
  CHECK(max_mode_difference(tr, res.v, 16) <= 1e-8);
  for (const auto& row : res.log)
    if (row.iteration > 1) CHECK(row.ratio < 1.0);
  // u = e^{i t D} v: the stored trajectory holds u.
  const SpectralState uT = res.v.state_at(1.0);
  CHECK(std::abs(uT[1] - phi[1] * std::exp(cplx(0.0, 1.0))) <= 1e-12);
}

TEST_CASE("picard_solve: contraction improves as the data shrinks") {
  const auto spec = EquationSpec::pure_power(3.0, 1);
  auto worst_ratio = [&](double scale) {
    const auto res = picard_solve(desk_phi(scale), spec, 1.0);
    double w = 0.0;
    for (std::size_t i = 1; i + 2 < res.log.size(); ++i) w = std::max(w, res.log[i].ratio);
    return w;
  };
  const double r1 = worst_ratio(1.0), r2 = worst_ratio(0.5), r3 = worst_ratio(0.25);
  CHECK(r2 < r1);
  CHECK(r3 < r2);
}

TEST_CASE("picard_solve: iterates stay in the support semigroup") {
  const auto spec = EquationSpec::pure_power(3.0, 1);
  Coeffs c(14);
  c[3] = 0.02;
  c[5] = cplx(0.0, 0.02);
  const auto res = picard_solve(SpectralState(c), spec, 0.5);
  REQUIRE(res.converged);
  const std::vector<std::size_t> gens{3, 5};
  const auto S = support_semigroup(gens, 13);
  for (std::size_t n = 1; n <= 13; ++n)
    if (std::find(S.begin(), S.end(), n) == S.end())
      for (double t : res.v.sample_times()) CHECK(std::abs(res.v.value_at(n, t)) <= 1e-14);
}

TEST_CASE("picard_solve: guards") {
  const auto spec2 = EquationSpec::pure_power(2.0, 1);
  try {
    picard_solve(desk_phi(), spec2, 1.0);
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Domain);
  }
  Coeffs c = desk_phi().coeffs();
  c[0] = 0.1;
  CHECK_THROWS_AS(picard_solve(SpectralState(c), EquationSpec::pure_power(3.0, 1), 1.0), Error);

  PicardOptions opt;
  opt.max_iter = 2;
  try {
    picard_solve(desk_phi(), EquationSpec::pure_power(3.0, 1), 1.0, opt);
    FAIL("expected max iterations");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MaxIterations);
  }

  // Large data does not contract.
  Coeffs big(9);
  big[1] = 10.0;
  big[2] = 10.0;
  try {
    picard_solve(SpectralState(big), EquationSpec::pure_power(3.0, 1), 1.0);
    FAIL("expected non-contraction");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonContraction);
  }
}

TEST_CASE("picard log CSV columns") {
  const auto res = picard_solve(desk_phi(), EquationSpec::pure_power(3.0, 1), 0.5);
  const std::string csv = picard_log_csv(res.log);
  CHECK(csv.rfind("iteration,sup_h1_diff,ratio\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == long(res.log.size()) + 1);
}
