#include <doctest.h>

#include <cmath>

#include "halfline/cascade.hpp"
#include "halfline/errors.hpp"
#include "halfline/gauge.hpp"
#include "support.hpp"

using namespace halfline;
using namespace testing;

namespace {

const cplx I{0.0, 1.0};

Coeffs add(Coeffs a, const Coeffs& b, cplx s = 1.0) {
  for (std::size_t n = 0; n < a.size(); ++n) a[n] += s * b[n];
  return a;
}

// L frak for the compatible frak = e^{-Lambda} d_x u when u solves the
// alpha = 2 equation, assembled from u_t and Lambda_t directly.
Coeffs l_frak_oracle(const Coeffs& u, int k) {
  const std::size_t M = u.size() - 1;
  const auto spec = EquationSpec::pure_power(2.0, k);
  const SpectralState us(u);
  Coeffs ut(M + 1);
  for (std::size_t n = 0; n <= M; ++n) ut[n] = I * double(n * n) * u[n] + nonlinear_forcing(us, spec, n);
  // Lambda_t = (1/2i) int_0^x k u^{k-1} u_t
  const Coeffs g = convolve(power(u, k - 1), ut);
  Coeffs lt(M + 1);
  cplx total{};
  for (std::size_t n = 1; n <= M; ++n) {
    lt[n] = double(k) * g[n] / (I * double(n)) / (2.0 * I);
    total += lt[n];
  }
  lt[0] = -total;
  const Coeffs em = gauge_exp(gauge_lambda(us, k), -1.0);
  const Coeffs ux = derivative_coeffs(u);
  const Coeffs frak = convolve(em, ux);
  const Coeffs frak_t = add(convolve(em, derivative_coeffs(ut)), convolve(lt, frak), -1.0);
  Coeffs out(M + 1);
  for (std::size_t n = 0; n <= M; ++n) out[n] = frak_t[n] - I * double(n * n) * frak[n];
  return out;
}

}  // namespace

TEST_CASE("primitive_from_zero: examples") {
  const GaugeWeight w1 = primitive_from_zero(delta(4, 1));
  CHECK(w1.secular_slope == cplx{});
  CHECK(std::abs(w1.periodic[1] - 1.0 / I) <= 1e-16);
  CHECK(std::abs(w1.periodic[0] + 1.0 / I) <= 1e-16);
  const GaugeWeight w0 = primitive_from_zero(delta(4, 0));
  CHECK(w0.secular_slope == cplx(1.0));
  CHECK(max_abs(w0.periodic) == 0.0);
  Coeffs g = random_coeffs(8);
  g[0] = 0.0;
  const GaugeWeight wg = primitive_from_zero(g);
  CHECK(wg.secular_slope == cplx{});
  CHECK(std::abs(point_value(wg.periodic)) <= 1e-15);
  // derivative of the primitive returns g
  CHECK(max_diff(derivative_coeffs(wg.periodic), g) <= 1e-15);
}

TEST_CASE("gauge_lambda: examples") {
  CHECK(max_abs(gauge_lambda(SpectralState(Coeffs(6)), 1).periodic) == 0.0);
  const cplx a{0.3, -0.1};
  const GaugeWeight l1 = gauge_lambda(SpectralState(delta(6, 1, a)), 1);
  CHECK(std::abs(l1.periodic[1] - a / (2.0 * I) / I) <= 1e-16);
  CHECK(std::abs(l1.periodic[0] + a / (2.0 * I) / I) <= 1e-16);
  const GaugeWeight l2 = gauge_lambda(SpectralState(delta(6, 1, a)), 2);
  CHECK(std::abs(l2.periodic[2] - a * a / (2.0 * I) / (2.0 * I)) <= 1e-16);
  CHECK(l2.periodic[1] == cplx{});
  Coeffs bad = delta(6, 1, a);
  bad[0] = 0.5;
  CHECK_THROWS_AS(gauge_lambda(SpectralState(bad), 1), Error);
}

TEST_CASE("gauge_exp: examples and inverse pair") {
  const GaugeWeight zero{Coeffs(7), 0.0};
  CHECK(gauge_exp(zero, 1.0) == delta(6, 0));

  const cplx l0{0.1, 0.2}, l1{-0.4, 0.3};
  GaugeWeight w{Coeffs(7), 0.0};
  w.periodic[0] = l0;
  w.periodic[1] = l1;
  const Coeffs e = gauge_exp(w, 1.0);
  double fact = 1.0;
  for (int j = 0; j <= 6; ++j) {
    if (j > 0) fact *= j;
    CHECK(std::abs(e[j] - std::exp(l0) * std::pow(l1, j) / fact) <= 1e-15);
  }

  for (int trial = 0; trial < 20; ++trial) {
    Coeffs u = random_coeffs(static_cast<std::size_t>(uniform_int(2, 16)), 0.3, 1);
    const int k = uniform_int(1, 3);
    const GaugeWeight lw = gauge_lambda(SpectralState(u), k);
    CHECK(max_diff(convolve(gauge_exp(lw, 1.0), gauge_exp(lw, -1.0)), delta(u.size() - 1, 0)) <= 1e-13);
  }
  GaugeWeight sloped{Coeffs(4), 0.5};
  CHECK_THROWS_AS(gauge_exp(sloped, 1.0), Error);
}

TEST_CASE("gauge_exp is exact at truncation up to the constant factor") {
  // Lambda(0) = 0 ties the mean of Lambda to every mode of u^k, so only
  // e^Lambda / e^{mean Lambda} is determined by the retained modes.
  Coeffs u = random_coeffs(10, 0.3, 1);
  Coeffs U = u;
  U.resize(25);
  const Coeffs e = gauge_exp(gauge_lambda(SpectralState(u), 2), 1.0);
  const Coeffs E = gauge_exp(gauge_lambda(SpectralState(U), 2), 1.0);
  for (std::size_t n = 0; n <= 10; ++n)
    CHECK(std::abs(e[n] / e[0] - E[n] / E[0]) <= 1e-14 * (1 + std::abs(e[n] / e[0])));
}

TEST_CASE("||e^Lambda - 1|| follows the e^{C r^k} r^k pattern") {
  for (int k : {1, 2}) {
    // fit C on small data
    double C = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
      const Coeffs u = random_coeffs(12, 1e-3, 1);
      const GaugeWeight lw = gauge_lambda(SpectralState(u), k);
      Coeffs e = gauge_exp(lw, 1.0);
      e[0] -= 1.0;
      C = std::max(C, sobolev_norm(e, 1.0) / std::pow(sobolev_norm(u, 1.0), k));
    }
    C *= 2.0;
    for (int trial = 0; trial < 30; ++trial) {
      const Coeffs u = random_coeffs(12, uniform(1e-3, 0.1), 1);
      const double r = std::pow(sobolev_norm(u, 1.0), k);
      Coeffs e = gauge_exp(gauge_lambda(SpectralState(u), k), 1.0);
      e[0] -= 1.0;
      CHECK(sobolev_norm(e, 1.0) <= std::exp(C * r) * C * r);
    }
  }
}

TEST_CASE("gauge_system_rhs: zero data and the k = 1 structure") {
  const Coeffs f = random_coeffs(8, 0.1, 1);
  for (int k : {1, 2, 3}) {
    const auto r = gauge_system_rhs(Coeffs(9), f, k);
    CHECK(max_abs(r.lu) == 0.0);
    if (k == 1) {
      // u^0 = 1 leaves frak^2 - (1/2) frak(0) frak
      Coeffs want = convolve(f, f);
      for (std::size_t n = 0; n <= 8; ++n) want[n] -= 0.5 * point_value(f) * f[n];
      CHECK(max_diff(r.lfrak, want) <= 1e-16);
    } else if (k == 2) {
      // only the primitive term survives: -prim(frak^2) frak
      const Coeffs want = convolve(primitive_from_zero(convolve(f, f)).periodic, f);
      Coeffs sum = r.lfrak;
      for (std::size_t n = 0; n <= 8; ++n) sum[n] += want[n];
      CHECK(max_abs(sum) <= 1e-16);
    } else {
      CHECK(max_abs(r.lfrak) == 0.0);
    }
  }
  // k = 1, single modes at t = 0: u = a delta_1, frak = b delta_1.
  const cplx a{0.2, 0.1}, b{-0.1, 0.3};
  const auto r = gauge_system_rhs(delta(6, 1, a), delta(6, 1, b), 1);
  // L u = u e^Lambda frak; Lambda = (a/2i)(e^{ix}-1)/i = -(a/2)(e^{ix} - 1)
  const Coeffs e = gauge_exp(gauge_lambda(SpectralState(delta(6, 1, a)), 1), 1.0);
  for (std::size_t n = 0; n <= 6; ++n) {
    const cplx want = n >= 2 ? a * b * e[n - 2] : cplx{};
    CHECK(std::abs(r.lu[n] - want) <= 1e-16);
  }
  CHECK(std::abs(e[0] - std::exp(a / 2.0)) <= 1e-15);
  CHECK(std::abs(e[1] + a / 2.0 * std::exp(a / 2.0)) <= 1e-15);
  CHECK(r.secular_slope == cplx{});
}

TEST_CASE("gauge_system_rhs agrees with L applied to the compatible frak") {
  for (int trial = 0; trial < 12; ++trial) {
    const int k = 1 + trial % 3;
    // Low modes only, so u^k d_x u fits inside the truncation.
    const std::size_t M = 16;
    Coeffs u(M + 1);
    u[1] = {uniform(-0.05, 0.05), uniform(-0.05, 0.05)};
    u[2] = {uniform(-0.05, 0.05), uniform(-0.05, 0.05)};
    const SpectralState us(u);
    const Coeffs frak = compatible_psi(us, k).coeffs();
    const auto r = gauge_system_rhs(u, frak, k);
    const auto spec = EquationSpec::pure_power(2.0, k);
    for (std::size_t n = 0; n <= M; ++n) CHECK(std::abs(r.lu[n] - nonlinear_forcing(us, spec, n)) <= 1e-15);
    CHECK(max_diff(r.lfrak, l_frak_oracle(u, k)) <= 1e-14);
    CHECK(std::abs(r.secular_slope) <= 1e-15);
    CHECK(gauge_identity_defect(us, SpectralState(frak), k) <= 1e-16);
  }
}

TEST_CASE("conjugation identity on random polynomial-in-time pairs") {
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t M = static_cast<std::size_t>(uniform_int(2, 10));
    const int deg = uniform_int(0, 3);
    std::vector<Coeffs> f(deg + 1), lam(deg + 1);
    for (int j = 0; j <= deg; ++j) {
      f[j] = random_coeffs(M, 0.2);
      lam[j] = random_coeffs(M, 0.2);
    }
    CHECK(conjugation_identity_defect(f, lam, uniform(0, 1)) <= 1e-10);
  }
  // Lambda = 0 reduces to L f = L f.
  std::vector<Coeffs> f{random_coeffs(5)}, zero{Coeffs(6)};
  CHECK(conjugation_identity_defect(f, zero, 0.3) <= 1e-15);
}

TEST_CASE("gauge_picard_solve: zero data") {
  const auto g = gauge_picard_solve(SpectralState(Coeffs(8)), SpectralState(Coeffs(8)), 1, 1.0);
  for (std::size_t n = 0; n < 8; ++n) {
    CHECK(g.u.value_at(n, 0.5) == cplx{});
    CHECK(g.frak.value_at(n, 0.5) == cplx{});
  }
}

TEST_CASE("gauge pipeline agrees with the cascade and keeps the identity") {
  for (int k : {1, 2, 3}) {
    Coeffs c(17);
    c[1] = 0.1;
    c[2] = cplx(0.03, 0.02);
    const SpectralState phi(c);
    const auto g = gauge_picard_solve(phi, compatible_psi(phi, k), k, 1.0);
    const Trajectory tr = cascade_integrate(phi, EquationSpec::pure_power(2.0, k), 1.0, CascadeOptions{.tol = 1e-12});
    CHECK(max_mode_difference(tr, g.u, 16) <= 1e-6);
    REQUIRE_FALSE(g.identity_defect.empty());
    for (const auto& [t, d] : g.identity_defect) CHECK(d <= 1e-6);
    CHECK(g.max_secular_slope <= 1e-10);
    for (std::size_t i = 1; i < g.log.size(); ++i) CHECK(g.log[i].ratio < 1.0);
  }
}

TEST_CASE("gauge_picard_solve: guards") {
  Coeffs big(9);
  big[1] = 1.0;
  try {
    gauge_picard_solve(SpectralState(big), compatible_psi(SpectralState(big), 1), 1, 1.0);
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Domain);
  }
  Coeffs mean = delta(8, 1, 0.1);
  mean[0] = 0.1;
  CHECK_THROWS_AS(gauge_picard_solve(SpectralState(mean), SpectralState(mean), 1, 1.0), Error);
  CHECK_THROWS_AS(gauge_picard_solve(SpectralState(Coeffs(8)), SpectralState(Coeffs(9)), 1, 1.0), Error);
}

TEST_CASE("gauge log CSV columns") {
  Coeffs c(9);
  c[1] = 0.05;
  const SpectralState phi(c);
  const auto g = gauge_picard_solve(phi, compatible_psi(phi, 1), 1, 0.5);
  const std::string csv = gauge_log_csv(g.log);
  CHECK(csv.rfind("iteration,sup_h1_diff,ratio\n", 0) == 0);
}
