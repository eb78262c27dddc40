#pragma once

// Norm-inflation experiment: data (e^{i 3 pi/(2k)} + N^{-s} e^{iNx}) / log N,
// evolved to T = (|sigma - s| + 1)(log N)^{k+1} / N, where the carrier mode
// grows by exp(T N / (log N)^k) while its mean-zero counterpart stays frozen.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "halfline/cascade.hpp"
#include "halfline/spectral.hpp"

namespace halfline {

struct ExperimentConfig {
  std::uint64_t N = 16;
  double s = 2.0;
  double sigma = 0.0;
  int k = 1;
  double alpha = 2.0;
  std::size_t m_max = 8;  // truncation M = m_max * N
  std::optional<double> epsilon;  // when set, N is chosen from it
  DispersionKind dispersion = DispersionKind::Schrodinger;
  double identity_tol = 1e-9;  // relative
  double quad_tol = 1e-10;
  std::size_t max_samples = 201;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);

/// s_0 = 2 for alpha = 2, 1 for alpha >= 3; nullopt for the unsupported range.
std::optional<double> regularity_floor(double alpha);

SpectralState build_inflation_data(std::uint64_t N, double s, int k, std::size_t truncation);
double inflation_time(std::uint64_t N, double s, double sigma, int k);

/// Smallest N >= 3 with 2/log N < eps, (|sigma-s|+1)(log N)^{k+1}/N < min(eps, 1)
/// and N/log N > 1/eps.
std::uint64_t choose_N(double epsilon, double s, double sigma, int k);

struct IdentityCheck {
  std::string name;
  bool pass = false;
  double defect = 0.0;
  double tolerance = 0.0;
};

struct NormReport {
  ExperimentConfig config;
  std::size_t truncation = 0;
  double T = 0.0;
  double phi_norm_Hs = 0.0;
  std::vector<std::pair<double, double>> wN_magnitudes;  // (t, |w^(t, N)|)
  double abs_w_T_N = 0.0;
  double abs_u_0_N = 0.0;
  double abs_u_T_N = 0.0;
  double growth_exponent = 0.0;            // log |u^(T,N) / u^(0,N)|
  double predicted_growth_exponent = 0.0;  // T N / (log N)^k
  double uT_norm_Hsigma_lower = 0.0;       // N^sigma |u^(T, N)|
  double uT_norm_Hsigma_full = 0.0;
  std::vector<double> harmonics;  // |u^(T, m N)|, m = 1..m_max
  std::vector<IdentityCheck> checks;
  std::size_t panels = 0;
  bool pass = false;
  std::string status = "ok";
};

NormReport run_experiment(const ExperimentConfig& config);
nlohmann::json to_json(const NormReport& r);

std::string summary_csv_header();
/// One summary row; a failed run (status != "ok") leaves numeric fields empty.
std::string summary_csv_row(const ExperimentConfig& c, const NormReport* r, const std::string& status);

struct CrossValidationReport {
  std::string pipeline;  // "normal-form" or "gauge"
  double max_difference = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::vector<double> contraction_ratios;
  double gauge_identity_defect = 0.0;
  std::size_t compared_modes = 0;
};

/// Cascade against the independent pipeline for the regime of spec.alpha,
/// compared in the mean-zero variable w.
CrossValidationReport cross_validate(const SpectralState& phi, const EquationSpec& spec, double T,
                                     double cascade_tol = 1e-12);
nlohmann::json to_json(const CrossValidationReport& r);

}  // namespace halfline
