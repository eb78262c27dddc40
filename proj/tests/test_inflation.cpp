#include <doctest.h>

#include <cmath>
#include <numbers>

#include "halfline/errors.hpp"
#include "halfline/inflation.hpp"
#include "support.hpp"

using namespace halfline;
using namespace testing;

namespace {

bool conditions_hold(std::uint64_t N, double eps, double s, double sigma, int k) {
  const double L = std::log(double(N));
  return 2.0 / L < eps && (std::abs(sigma - s) + 1.0) * std::pow(L, k + 1) / double(N) < std::min(eps, 1.0) &&
         double(N) / L > 1.0 / eps;
}

std::uint64_t scan_N(double eps, double s, double sigma, int k) {
  for (std::uint64_t N = 3;; ++N)
    if (conditions_hold(N, eps, s, sigma, k)) return N;
}

const IdentityCheck& check_named(const NormReport& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return c;
  FAIL("missing check " << name);
  return r.checks.front();
}

}  // namespace

TEST_CASE("inflation data") {
  for (int k : {1, 2, 3, 5})
    for (std::uint64_t N : {3ull, 8ull, 16ull, 1000ull}) {
      const double L = std::log(double(N));
      const SpectralState phi = build_inflation_data(N, 2.0, k, 2 * N);
      const cplx m0k = std::pow(phi[0], k);
      CHECK(std::abs(m0k - cplx(0.0, -1.0) / std::pow(L, k)) <= 1e-15);
      CHECK(m0k.imag() < 0.0);
      CHECK(phi[N] == cplx(std::pow(double(N), -2.0) / L));
      const double norm = sobolev_norm(phi, 2.0);
      CHECK(norm == doctest::Approx(std::sqrt(1.0 + std::pow(1.0 + double(N * N), 2.0) / std::pow(double(N), 4.0)) / L));
      CHECK(norm <= 2.0 / L);
      for (std::size_t n = 1; n <= 2 * N; ++n)
        if (n != N) CHECK(phi[n] == cplx{});
    }
  CHECK_THROWS_AS(build_inflation_data(2, 2.0, 1, 8), Error);
}

TEST_CASE("inflation time") {
  const double L = std::log(16.0);
  CHECK(inflation_time(16, 2.0, 0.0, 1) == doctest::Approx(3.0 * L * L / 16.0).epsilon(1e-15));
  CHECK(inflation_time(16, 2.0, 0.0, 1) == doctest::Approx(1.4414).epsilon(1e-4));
  CHECK(inflation_time(50, 1.5, 1.5, 2) == doctest::Approx(std::pow(std::log(50.0), 3.0) / 50.0).epsilon(1e-15));
  double prev = inflation_time(100, 2.0, 0.0, 1);
  for (std::uint64_t N = 1000; N <= 100000000; N *= 10) {
    const double t = inflation_time(N, 2.0, 0.0, 1);
    CHECK(t < prev);
    prev = t;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("regularity floor") {
  CHECK(regularity_floor(2.0) == 2.0);
  CHECK(regularity_floor(3.0) == 1.0);
  CHECK(regularity_floor(4.5) == 1.0);
  CHECK_FALSE(regularity_floor(2.5).has_value());
  CHECK_FALSE(regularity_floor(1.5).has_value());
}

TEST_CASE("choose_N agrees with a direct scan and is monotone in epsilon") {
  CHECK(choose_N(1.0, 2.0, 0.0, 1) == scan_N(1.0, 2.0, 0.0, 1));
  for (int trial = 0; trial < 20; ++trial) {
    const double s = uniform(1.0, 4.0), sigma = uniform(-2.0, 2.0);
    const int k = uniform_int(1, 3);
    double eps = uniform(0.5, 2.0);
    std::uint64_t prev = 0;
    for (int h = 0; h < 4; ++h, eps /= 2) {
      const std::uint64_t N = choose_N(eps, s, sigma, k);
      CHECK(conditions_hold(N, eps, s, sigma, k));
      if (N < 3000000) CHECK(N == scan_N(eps, s, sigma, k));
      CHECK(N >= prev);
      prev = N;
    }
  }
  CHECK_THROWS_AS(choose_N(0.0, 2.0, 0.0, 1), Error);
}

TEST_CASE("run_experiment: the N = 16 desk instance") {
  ExperimentConfig c;
  c.N = 16;
  const NormReport r = run_experiment(c);
  const double L = std::log(16.0);
  CHECK(r.truncation == 128);
  CHECK(r.pass);
  for (const auto& ch : r.checks) CHECK_MESSAGE(ch.pass, ch.name);
  const double wN = std::pow(16.0, -2.0) / L;
  REQUIRE_FALSE(r.wN_magnitudes.empty());
  for (const auto& [t, m] : r.wN_magnitudes) CHECK(std::abs(m - wN) <= 1e-9 * wN);
  CHECK(r.wN_magnitudes.front().first == 0.0);
  CHECK(r.wN_magnitudes.back().first == r.T);
  CHECK(std::abs(r.abs_u_T_N - 16.0 / L) <= 1e-6 * 16.0 / L);
  CHECK(std::abs(r.growth_exponent - 3.0 * L) <= 1e-8);
  CHECK(r.abs_u_0_N == doctest::Approx(wN).epsilon(1e-15));
  CHECK(r.uT_norm_Hsigma_full >= r.uT_norm_Hsigma_lower);
  CHECK(r.uT_norm_Hsigma_lower >= 16.0 / L * (1.0 - 1e-9));
  CHECK(r.harmonics.size() == 8);
  CHECK(check_named(r, "frozen_mode_wN").defect <= 1e-9);
  CHECK(check_named(r, "mode0_conservation").defect == 0.0);
}

TEST_CASE("run_experiment: growth law across N and the sigma = s lower bound") {
  for (std::uint64_t N : {8ull, 16ull, 32ull}) {
    ExperimentConfig c;
    c.N = N;
    c.m_max = 4;
    const NormReport r = run_experiment(c);
    CHECK(r.pass);
    const double L = std::log(double(N));
    CHECK(std::abs(r.growth_exponent - 3.0 * L) <= 1e-8);
    CHECK(r.predicted_growth_exponent == doctest::Approx(r.T * double(N) / L).epsilon(1e-15));
  }
  ExperimentConfig c;
  c.N = 12;
  c.s = 3.0;
  c.sigma = 3.0;
  c.m_max = 3;
  const NormReport r = run_experiment(c);
  CHECK(r.pass);
  CHECK(r.uT_norm_Hsigma_lower == doctest::Approx(12.0 / std::log(12.0)).epsilon(1e-9));
}

TEST_CASE("run_experiment: alpha = 3 and the Airy-type variant") {
  ExperimentConfig c;
  c.N = 6;
  c.alpha = 3.0;
  c.s = 1.0;
  c.m_max = 3;
  const NormReport r = run_experiment(c);
  CHECK(r.pass);
  ExperimentConfig a = c;
  a.dispersion = DispersionKind::AiryType;
  const NormReport ra = run_experiment(a);
  CHECK(ra.abs_u_T_N == r.abs_u_T_N);
  CHECK(ra.uT_norm_Hsigma_full == r.uT_norm_Hsigma_full);
}

TEST_CASE("run_experiment: rejected configurations") {
  ExperimentConfig c;
  c.alpha = 2.5;
  try {
    run_experiment(c);
    FAIL("expected an unsupported regime error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Domain);
    CHECK(std::string(e.what()).find("unsupported regime") != std::string::npos);
  }
  ExperimentConfig low;
  low.s = 1.5;
  CHECK_THROWS_AS(run_experiment(low), Error);
}

TEST_CASE("run_experiment: epsilon selects N") {
  ExperimentConfig c;
  c.epsilon = 1.0;
  c.m_max = 2;
  const NormReport r = run_experiment(c);
  CHECK(r.config.N == choose_N(1.0, 2.0, 0.0, 1));
  CHECK(r.pass);
}

TEST_CASE("config JSON and summary CSV") {
  const ExperimentConfig c = config_from_json(nlohmann::json::parse(R"({"N": 8, "s": 2.5, "sigma": -1, "k": 2})"));
  CHECK(c.N == 8);
  CHECK(c.s == 2.5);
  CHECK(c.sigma == -1.0);
  CHECK(c.k == 2);
  const ExperimentConfig back = config_from_json(to_json(c));
  CHECK(back.N == c.N);
  CHECK(back.m_max == c.m_max);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"N": 2})")), Error);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"s": "x"})")), Error);

  CHECK(summary_csv_header() == "N,s,sigma,k,alpha,T,phi_norm_Hs,abs_w_T_N,uT_norm_Hsigma_lower,pass,status");
  ExperimentConfig bad;
  bad.alpha = 2.5;
  const std::string row = summary_csv_row(bad, nullptr, "unsupported regime");
  CHECK(row.find("unsupported regime") != std::string::npos);
  CHECK(std::count(row.begin(), row.end(), ',') == 10);
}

TEST_CASE("cross_validate: zero data and desk instances") {
  const auto zero = cross_validate(SpectralState(Coeffs(9)), EquationSpec::pure_power(3.0, 1), 1.0);
  CHECK(zero.max_difference == 0.0);
  CHECK(zero.pass);

  Coeffs c3(17);
  c3[1] = 0.05;
  c3[2] = 0.05;
  const auto r3 = cross_validate(SpectralState(c3), EquationSpec::pure_power(3.0, 1), 1.0);
  CHECK(r3.pipeline == "normal-form");
  CHECK(r3.max_difference <= 1e-8);
  CHECK(r3.pass);

  Coeffs c2(17);
  c2[1] = 0.1;
  c2[2] = cplx(0.03, 0.02);
  const auto r2 = cross_validate(SpectralState(c2), EquationSpec::pure_power(2.0, 1), 1.0);
  CHECK(r2.pipeline == "gauge");
  CHECK(r2.max_difference <= 1e-6);
  CHECK(r2.gauge_identity_defect <= 1e-6);
  CHECK(r2.pass);

  // With a mean the comparison happens in w; alpha = 3 goes through the transformed equation.
  Coeffs cm(13);
  cm[0] = cplx(0.0, -0.05);
  cm[1] = 0.04;
  cm[3] = 0.02;
  const auto rm = cross_validate(SpectralState(cm), EquationSpec::pure_power(3.0, 2), 0.5);
  CHECK(rm.max_difference <= 1e-8);
}
