// Command-line front end. Talks to the solver only through the C API.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "halfline/halfline.h"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json parse_document(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    throw UsageError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON (" +
                     e.what() + ")");
  }
}

// --phi accepts inline JSON or @path.
json parse_state_arg(const std::string& arg) {
  if (!arg.empty() && arg[0] == '@') return parse_document(read_text(arg.substr(1)), arg.substr(1));
  return parse_document(arg, "--phi");
}

template <class T>
void put(json& p, const char* key, const std::optional<T>& v) {
  if (v) p[key] = *v;
}

struct Outputs {
  std::string out;         // JSON document path; stdout when empty
  std::string csv_prefix;  // CSV tables go to <prefix><name>.csv
  std::string format = "json";
};

struct Invocation {
  std::string subcommand;
  json params = json::object();
};

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << text;
}

std::string primary_csv(const std::string& sub) {
  if (sub == "simulate") return "trajectory";
  if (sub == "picard" || sub == "gauge") return "log";
  if (sub == "inflate" || sub == "batch") return "summary";
  return "";
}

int execute(const Invocation& inv, const Outputs& o) {
  const std::string params = inv.params.dump();
  char* raw = nullptr;
  int verdict = 0;
  const auto t0 = std::chrono::steady_clock::now();
  const hl_status st = hl_run(inv.subcommand.c_str(), params.c_str(), &raw, &verdict);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (st != HL_OK) {
    std::cerr << "halfline " << inv.subcommand << ": " << hl_status_name(st) << ": " << hl_last_error() << "\n";
    return (st == HL_INVALID_ARGUMENT || st == HL_TRUNCATION_MISMATCH || st == HL_DOMAIN) ? kExitUsage : kExitFail;
  }
  json result = json::parse(raw);
  hl_free_string(raw);

  json manifest = result.at("manifest");
  manifest["wall_clock_seconds"] = seconds;
  json outputs = json::array();
  std::vector<std::pair<fs::path, std::string>> csv_files;
  if (!o.csv_prefix.empty())
    for (const auto& [name, text] : result.at("csv").items()) {
      fs::path path = o.csv_prefix + name + ".csv";
      csv_files.emplace_back(path, text.get<std::string>());
      outputs.push_back(path.string());
    }
  if (!o.out.empty()) outputs.push_back(o.out);
  manifest["outputs"] = outputs;

  const std::string tag = "# manifest: " + manifest.dump() + "\n";
  for (const auto& [path, text] : csv_files) write_file(path, tag + text);

  json doc = result.at("output");
  if (!doc.is_object()) doc = json{{"result", doc}};
  doc["pass"] = verdict == 1;
  doc["manifest"] = manifest;
  const std::string json_text = doc.dump(2) + "\n";
  if (!o.out.empty()) write_file(o.out, json_text);

  if (o.format == "csv" || inv.subcommand == "batch") {
    const std::string name = primary_csv(inv.subcommand);
    if (name.empty()) throw UsageError(inv.subcommand + " has no CSV output");
    std::cout << result.at("csv").at(name).get<std::string>();
  } else if (o.out.empty()) {
    std::cout << json_text;
  }
  std::cerr << inv.subcommand << ": " << (verdict ? "pass" : "FAIL") << " (" << seconds << " s)\n";
  return verdict ? kExitPass : kExitFail;
}

json batch_params(const std::string& path) {
  const std::string text = read_text(path);
  json doc = parse_document(text, path == "-" ? "<stdin>" : path);
  if (doc.is_array()) return json{{"configs", doc}};
  if (doc.is_object() && doc.contains("configs")) return doc;
  throw UsageError(path + ":1:1: expected a list of experiment configs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"halfline: one-sided dispersive cascade solver", "halfline"};
  app.set_version_flag("--version", std::string(hl_version()));
  app.require_subcommand(0, 1);
  Outputs o;
  std::string replay;
  app.add_option("--replay", replay, "Re-run the subcommand and parameters recorded in a manifest or output JSON");

  auto add_outputs = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "Write the JSON document to this file");
    sub->add_option("--csv-prefix", o.csv_prefix, "Write CSV tables to <prefix><name>.csv");
    sub->add_option("--format", o.format, "Standard output format")->check(CLI::IsMember({"json", "csv"}));
  };
  add_outputs(&app);

  std::optional<double> alpha, T, tol, s, sigma, epsilon, quad_tol, threshold;
  std::optional<long long> k, modes, max_iter, cap, N, m_max, max_samples, threads;
  std::optional<std::string> dispersion, phi, psi, coeffs;
  bool unsafe = false;
  std::string config_path;

  auto add_equation = [&](CLI::App* sub, bool with_alpha) {
    if (with_alpha) sub->add_option("--alpha", alpha, "Dispersion exponent")->required();
    sub->add_option("--k", k, "Nonlinearity degree");
    sub->add_option("--nonlin-coeffs", coeffs, "JSON object {degree: coefficient}")->excludes("--k");
    sub->add_option("--dispersion", dispersion, "schrodinger | airy")
        ->check(CLI::IsMember({"schrodinger", "airy"}));
  };

  auto* sim = app.add_subcommand("simulate", "Integrate the mode cascade");
  add_equation(sim, true);
  sim->add_option("--phi", phi, "Initial state: JSON or @file")->required();
  sim->add_option("--T", T, "Final time")->required();
  sim->add_option("--modes", modes, "Truncation M");
  sim->add_option("--tol", tol, "Quadrature tolerance");
  sim->add_option("--max-samples", max_samples, "Output samples");
  add_outputs(sim);

  auto* pic = app.add_subcommand("picard", "Normal-form Picard iteration");
  add_equation(pic, true);
  pic->add_option("--phi", phi, "Initial state: JSON or @file")->required();
  pic->add_option("--T", T, "Final time");
  pic->add_option("--modes", modes, "Truncation M");
  pic->add_option("--tol", tol, "Picard tolerance");
  pic->add_option("--quad-tol", quad_tol, "Quadrature tolerance");
  pic->add_option("--max-iter", max_iter, "Iteration cap");
  pic->add_flag("--unsafe", unsafe, "Allow alpha outside the certified range");
  pic->add_option("--max-samples", max_samples, "Output samples");
  add_outputs(pic);

  auto* gau = app.add_subcommand("gauge", "Gauged system for quadratic dispersion");
  gau->add_option("--k", k, "Nonlinearity degree");
  gau->add_option("--phi", phi, "Initial state: JSON or @file")->required();
  gau->add_option("--psi", psi, "Initial gauged state (default: the compatible one)");
  gau->add_option("--T", T, "Final time");
  gau->add_option("--modes", modes, "Truncation M");
  gau->add_option("--tol", tol, "Picard tolerance");
  gau->add_option("--quad-tol", quad_tol, "Quadrature tolerance");
  gau->add_option("--max-iter", max_iter, "Iteration cap");
  gau->add_option("--threshold", threshold, "Smallness threshold");
  gau->add_option("--max-samples", max_samples, "Output samples");
  add_outputs(gau);

  auto* pc = app.add_subcommand("phase-check", "Exhaustive resonance lower-bound certificate");
  pc->add_option("--alpha", alpha, "Dispersion exponent")->required();
  pc->add_option("--k", k, "Nonlinearity degree")->required();
  pc->add_option("--cap", cap, "Largest index")->required();
  pc->add_option("--threads", threads, "Worker count (0 = default)");
  add_outputs(pc);

  auto* inf = app.add_subcommand("inflate", "Norm-inflation experiment");
  inf->add_option("--N", N, "Carrier frequency");
  inf->add_option("--s", s, "Data regularity");
  inf->add_option("--sigma", sigma, "Target regularity");
  inf->add_option("--k", k, "Nonlinearity degree");
  inf->add_option("--alpha", alpha, "Dispersion exponent");
  inf->add_option("--epsilon", epsilon, "Choose N from this epsilon")->excludes("--N");
  inf->add_option("--m-max", m_max, "Harmonics kept (M = m_max N)");
  inf->add_option("--dispersion", dispersion, "schrodinger | airy")->check(CLI::IsMember({"schrodinger", "airy"}));
  inf->add_option("--quad-tol", quad_tol, "Quadrature tolerance");
  inf->add_option("--max-samples", max_samples, "Output samples");
  add_outputs(inf);

  auto* cv = app.add_subcommand("cross-validate", "Cascade against the independent pipeline");
  add_equation(cv, true);
  cv->add_option("--phi", phi, "Initial state: JSON or @file (default: desk instance)");
  cv->add_option("--T", T, "Final time");
  cv->add_option("--modes", modes, "Truncation M");
  cv->add_option("--tol", tol, "Cascade tolerance");
  add_outputs(cv);

  auto* bat = app.add_subcommand("batch", "Run a list of inflate configs; summary CSV on standard output");
  bat->add_option("config", config_path, "JSON file with a list of configs ('-' for stdin)")->required();
  add_outputs(bat);

  if (argc <= 1) {
    std::cerr << app.help();
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    Invocation inv;
    if (!replay.empty()) {
      if (!app.get_subcommands().empty()) throw UsageError("--replay takes no subcommand");
      json doc = parse_document(read_text(replay), replay);
      const json& m = doc.contains("manifest") ? doc.at("manifest") : doc;
      if (!m.contains("subcommand") || !m.contains("parameters")) throw UsageError(replay + ": not a manifest");
      inv.subcommand = m.at("subcommand").get<std::string>();
      inv.params = m.at("parameters");
      return execute(inv, o);
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return kExitUsage;
    }
    CLI::App* sub = app.get_subcommands().front();
    inv.subcommand = sub->get_name();
    json& p = inv.params;
    if (inv.subcommand == "batch") {
      p = batch_params(config_path);
      return execute(inv, o);
    }
    put(p, "alpha", alpha);
    put(p, "k", k);
    put(p, "dispersion", dispersion);
    if (coeffs) p["nonlin_coeffs"] = parse_document(*coeffs, "--nonlin-coeffs");
    if (phi) p["phi"] = parse_state_arg(*phi);
    if (psi) p["psi"] = parse_state_arg(*psi);
    put(p, "T", T);
    put(p, "modes", modes);
    put(p, "tol", tol);
    put(p, "quad_tol", quad_tol);
    put(p, "max_iter", max_iter);
    put(p, "threshold", threshold);
    put(p, "max_samples", max_samples);
    put(p, "cap", cap);
    put(p, "threads", threads);
    put(p, "N", N);
    put(p, "s", s);
    put(p, "sigma", sigma);
    put(p, "epsilon", epsilon);
    put(p, "m_max", m_max);
    if (unsafe) p["unsafe"] = true;
    return execute(inv, o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
}
