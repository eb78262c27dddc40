#include "halfline/runner.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "halfline/cascade.hpp"
#include "halfline/errors.hpp"
#include "halfline/gauge.hpp"
#include "halfline/inflation.hpp"
#include "halfline/normal_form.hpp"
#include "halfline/phase.hpp"
#include "parallel.hpp"

#ifndef HALFLINE_VERSION
#define HALFLINE_VERSION "0.0.0"
#endif

namespace halfline {

const char* tool_version() { return HALFLINE_VERSION; }

namespace {

using nlohmann::json;

void check_keys(const json& p, const std::set<std::string>& allowed, const std::string& where) {
  require(p.is_object(), where + ": parameters must be a JSON object");
  for (const auto& [key, v] : p.items())
    if (!allowed.count(key)) fail(ErrorCode::InvalidArgument, where + ": unknown parameter '" + key + "'");
}

double get_double(const json& p, const std::string& key, std::optional<double> fallback = std::nullopt) {
  if (!p.contains(key) || p.at(key).is_null()) {
    if (!fallback) fail(ErrorCode::InvalidArgument, "missing required parameter '" + key + "'");
    return *fallback;
  }
  require(p.at(key).is_number(), "parameter '" + key + "' must be a number");
  return p.at(key).get<double>();
}

long long get_int(const json& p, const std::string& key, std::optional<long long> fallback = std::nullopt) {
  if (!p.contains(key) || p.at(key).is_null()) {
    if (!fallback) fail(ErrorCode::InvalidArgument, "missing required parameter '" + key + "'");
    return *fallback;
  }
  require(p.at(key).is_number_integer(), "parameter '" + key + "' must be an integer");
  return p.at(key).get<long long>();
}

bool get_bool(const json& p, const std::string& key, bool fallback) {
  if (!p.contains(key) || p.at(key).is_null()) return fallback;
  require(p.at(key).is_boolean(), "parameter '" + key + "' must be true or false");
  return p.at(key).get<bool>();
}

EquationSpec parse_spec(const json& p, std::optional<double> alpha_default = std::nullopt) {
  json s = json::object();
  s["alpha"] = get_double(p, "alpha", alpha_default);
  if (p.contains("dispersion")) s["dispersion"] = p.at("dispersion");
  if (p.contains("nonlin_coeffs")) {
    s["nonlin_coeffs"] = p.at("nonlin_coeffs");
  } else {
    const long long k = get_int(p, "k", 1);
    require(k >= 0, "k must be >= 0");
    s["k"] = k;
  }
  try {
    return spec_from_json(s);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("malformed equation parameters: ") + e.what());
  }
}

SpectralState parse_state(const json& p, const std::string& key, std::optional<std::size_t> modes) {
  require(p.contains(key), "missing required parameter '" + key + "'");
  json v = p.at(key);
  try {
    if (v.is_string()) v = json::parse(v.get<std::string>());
    if (v.is_array()) v = json{{"coeffs", v}};
  } catch (const json::parse_error& e) {
    fail(ErrorCode::InvalidArgument, "parameter '" + key + "' is not valid JSON: " + e.what());
  }
  SpectralState st;
  try {
    st = state_from_json(v);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, "parameter '" + key + "' is not a state: " + e.what());
  }
  if (!modes) return st;
  require(*modes >= 1, "modes must be >= 1");
  Coeffs c = st.coeffs();
  for (std::size_t n = *modes + 1; n < c.size(); ++n)
    require(c[n] == cplx{}, "'" + key + "' has nonzero coefficients beyond modes = " + std::to_string(*modes));
  c.resize(*modes + 1);
  return SpectralState(std::move(c), st.time());
}

std::optional<std::size_t> get_modes(const json& p) {
  if (!p.contains("modes") || p.at("modes").is_null()) return std::nullopt;
  const long long m = get_int(p, "modes");
  require(m >= 1, "modes must be >= 1");
  return static_cast<std::size_t>(m);
}

json manifest_for(const std::string& sub, const json& params, json tolerances) {
  return {{"subcommand", sub}, {"parameters", params}, {"tool_version", tool_version()}, {"tolerances", tolerances}};
}

RunResult run_simulate(const json& p) {
  check_keys(p, {"alpha", "k", "nonlin_coeffs", "dispersion", "phi", "T", "modes", "tol", "max_samples"}, "simulate");
  const EquationSpec spec = parse_spec(p);
  const SpectralState phi = parse_state(p, "phi", get_modes(p));
  const double T = get_double(p, "T");
  CascadeOptions opt;
  opt.tol = get_double(p, "tol", 1e-10);
  const auto samples = static_cast<std::size_t>(get_int(p, "max_samples", 201));
  CascadeDiagnostics diag;
  const Trajectory traj = cascade_integrate(phi, spec, T, opt, &diag);
  RunResult r;
  double d0 = 0.0;
  for (double t : traj.sample_times()) d0 = std::max(d0, std::abs(traj.value_at(0, t) - phi[0]));
  r.output = {{"trajectory", traj.to_json(samples)},
              {"diagnostics",
               {{"refinements", diag.refinements},
                {"panels", diag.panels},
                {"worst_error_ratio", diag.worst_excess},
                {"worst_mode", diag.worst_mode},
                {"mode0_drift", d0}}}};
  r.csv["trajectory"] = traj.to_csv(samples);
  r.pass = d0 == 0.0;
  r.manifest = manifest_for("simulate", p, {{"quadrature", opt.tol}});
  return r;
}

RunResult run_picard(const json& p) {
  check_keys(p, {"alpha", "k", "nonlin_coeffs", "dispersion", "phi", "T", "modes", "tol", "max_iter", "quad_tol",
                 "unsafe", "max_samples"},
             "picard");
  const EquationSpec spec = parse_spec(p);
  const SpectralState phi = parse_state(p, "phi", get_modes(p));
  const double T = get_double(p, "T", 1.0);
  PicardOptions opt;
  opt.tol = get_double(p, "tol", 1e-12);
  opt.max_iter = static_cast<int>(get_int(p, "max_iter", 200));
  opt.quad_tol = get_double(p, "quad_tol", 1e-12);
  opt.allow_unsafe_alpha = get_bool(p, "unsafe", false);
  const auto samples = static_cast<std::size_t>(get_int(p, "max_samples", 201));
  const PicardResult res = picard_solve(phi, spec, T, opt);
  RunResult r;
  json log = json::array();
  for (const auto& row : res.log) log.push_back({{"iteration", row.iteration}, {"diff", row.diff}, {"ratio", row.ratio}});
  r.output = {{"trajectory", res.v.to_json(samples)},
              {"frame", "v = exp(-i t D) u; trajectory samples are u"},
              {"log", log},
              {"smallness_check", to_json(res.smallness)},
              {"smallness_note", "advisory; contraction is verified from the iteration itself"},
              {"fixed_point_residual", res.fixed_point_residual},
              {"refinements", res.refinements},
              {"converged", res.converged}};
  r.csv["log"] = picard_log_csv(res.log);
  r.pass = res.converged && res.fixed_point_residual <= 10.0 * opt.tol;
  r.manifest = manifest_for("picard", p, {{"picard", opt.tol}, {"quadrature", opt.quad_tol}});
  return r;
}

RunResult run_gauge(const json& p) {
  check_keys(p, {"k", "phi", "psi", "T", "modes", "tol", "max_iter", "quad_tol", "threshold", "max_samples"}, "gauge");
  const int k = static_cast<int>(get_int(p, "k", 1));
  const auto modes = get_modes(p);
  const SpectralState phi = parse_state(p, "phi", modes);
  const bool compatible = !p.contains("psi") || p.at("psi").is_null();
  const SpectralState psi = compatible ? compatible_psi(phi, k) : parse_state(p, "psi", phi.truncation());
  const double T = get_double(p, "T", 1.0);
  GaugeOptions opt;
  opt.tol = get_double(p, "tol", 1e-12);
  opt.max_iter = static_cast<int>(get_int(p, "max_iter", 200));
  opt.quad_tol = get_double(p, "quad_tol", 1e-12);
  opt.smallness_threshold = get_double(p, "threshold", 0.5);
  const auto samples = static_cast<std::size_t>(get_int(p, "max_samples", 201));
  const GaugeResult g = gauge_picard_solve(phi, psi, k, T, opt);
  RunResult r;
  json log = json::array();
  for (const auto& row : g.log) log.push_back({{"iteration", row.iteration}, {"diff", row.diff}, {"ratio", row.ratio}});
  json defect = json::array();
  double worst = 0.0;
  std::ostringstream dcsv;
  dcsv.precision(17);
  dcsv << "t,identity_defect\n";
  for (const auto& [t, d] : g.identity_defect) {
    defect.push_back({t, d});
    worst = std::max(worst, d);
    dcsv << t << ',' << d << '\n';
  }
  r.output = {{"u", g.u.to_json(samples)},
              {"frak_u", g.frak.to_json(samples)},
              {"psi", to_json(psi)},
              {"psi_compatible", compatible},
              {"log", log},
              {"identity_defect", defect},
              {"max_identity_defect", worst},
              {"max_secular_slope", g.max_secular_slope},
              {"refinements", g.refinements}};
  r.csv["log"] = gauge_log_csv(g.log);
  r.csv["identity_defect"] = dcsv.str();
  r.pass = !compatible || worst <= 1e-6;
  r.manifest = manifest_for("gauge", p, {{"picard", opt.tol}, {"quadrature", opt.quad_tol}, {"identity", 1e-6}});
  return r;
}

RunResult run_phase_check(const json& p) {
  check_keys(p, {"alpha", "k", "cap", "threads"}, "phase-check");
  const double alpha = get_double(p, "alpha");
  const long long k = get_int(p, "k");
  const long long cap = get_int(p, "cap");
  require(k >= 1 && cap >= 1, "k and cap must be >= 1");
  const auto threads = static_cast<unsigned>(get_int(p, "threads", 0));
  const PhaseCertificate cert = certify_phase_bound(alpha, static_cast<int>(k), static_cast<std::uint64_t>(cap), threads);
  RunResult r;
  r.output = to_json(cert);
  r.pass = cert.pass;
  r.manifest = manifest_for("phase-check", p, {{"non_integer_alpha_slack", 1e-9}});
  return r;
}

ExperimentConfig inflate_config(const json& p) {
  check_keys(p, {"N", "s", "sigma", "k", "alpha", "m_max", "epsilon", "dispersion", "identity_tol", "quad_tol",
                 "max_samples", "subcommand"},
             "inflate");
  try {
    return config_from_json(p);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("malformed experiment config: ") + e.what());
  }
}

RunResult run_inflate(const json& p) {
  const ExperimentConfig c = inflate_config(p);
  const NormReport rep = run_experiment(c);
  RunResult r;
  r.output = to_json(rep);
  r.csv["summary"] = summary_csv_header() + "\n" + summary_csv_row(c, &rep, rep.status) + "\n";
  r.pass = rep.pass;
  r.manifest = manifest_for("inflate", p, {{"identity", c.identity_tol}, {"quadrature", c.quad_tol}});
  return r;
}

RunResult run_cross_validate(const json& p) {
  check_keys(p, {"alpha", "k", "nonlin_coeffs", "dispersion", "phi", "T", "modes", "tol"}, "cross-validate");
  const EquationSpec spec = parse_spec(p);
  SpectralState phi;
  if (p.contains("phi")) {
    phi = parse_state(p, "phi", get_modes(p));
  } else {
    // Desk instances: two low modes for alpha >= 3, geometrically small data for alpha = 2.
    const std::size_t M = get_modes(p).value_or(16);
    Coeffs c(M + 1);
    if (spec.alpha >= 3.0) {
      c[1] = 0.05;
      if (M >= 2) c[2] = 0.05;
    } else {
      c[1] = 0.1;
      if (M >= 2) c[2] = cplx{0.03, 0.02};
    }
    phi = SpectralState(std::move(c), 0.0);
  }
  const double T = get_double(p, "T", 1.0);
  const double tol = get_double(p, "tol", 1e-12);
  const CrossValidationReport rep = cross_validate(phi, spec, T, tol);
  RunResult r;
  r.output = to_json(rep);
  r.output["phi"] = to_json(phi);
  r.pass = rep.pass;
  r.manifest = manifest_for("cross-validate", p, {{"agreement", rep.tolerance}, {"quadrature", tol}});
  return r;
}

RunResult run_batch(const json& p) {
  check_keys(p, {"configs"}, "batch");
  require(p.contains("configs") && p.at("configs").is_array(), "batch needs a list of experiment configs");
  const auto& list = p.at("configs");
  std::vector<ExperimentConfig> configs;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const json& c = list[i];
    if (c.is_object() && c.contains("subcommand"))
      require(c.at("subcommand") == "inflate", "batch entry " + std::to_string(i) + ": only inflate configs are supported");
    try {
      configs.push_back(inflate_config(c));
    } catch (const Error& e) {
      fail(ErrorCode::InvalidArgument, "batch entry " + std::to_string(i) + ": " + e.what());
    }
  }
  std::vector<std::optional<NormReport>> reports(configs.size());
  std::vector<std::string> status(configs.size(), "ok");
  std::vector<char> unsupported(configs.size(), 0);
  detail::parallel_for(
      configs.size(),
      [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
          if (!regularity_floor(configs[i].alpha)) {
            status[i] = "unsupported regime";
            unsupported[i] = 1;
            continue;
          }
          try {
            reports[i] = run_experiment(configs[i]);
          } catch (const Error& err) {
            status[i] = std::string("error: ") + err.what();
          }
        }
      },
      1);
  RunResult r;
  std::string csv = summary_csv_header() + "\n";
  json rows = json::array();
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const NormReport* rep = reports[i] ? &*reports[i] : nullptr;
    csv += summary_csv_row(configs[i], rep, status[i]) + "\n";
    json row = {{"config", to_json(configs[i])}, {"status", status[i]}};
    if (rep) row["report"] = to_json(*rep);
    rows.push_back(row);
    if (!unsupported[i] && !(rep && rep->pass)) r.pass = false;
  }
  r.output = {{"rows", rows}};
  r.csv["summary"] = csv;
  r.manifest = manifest_for("batch", p, json::object());
  return r;
}

}  // namespace

RunResult run_subcommand(const std::string& sub, const json& params) {
  if (sub == "simulate") return run_simulate(params);
  if (sub == "picard") return run_picard(params);
  if (sub == "gauge") return run_gauge(params);
  if (sub == "phase-check") return run_phase_check(params);
  if (sub == "inflate") return run_inflate(params);
  if (sub == "cross-validate") return run_cross_validate(params);
  if (sub == "batch") return run_batch(params);
  fail(ErrorCode::InvalidArgument, "unknown subcommand '" + sub + "'");
}

}  // namespace halfline
