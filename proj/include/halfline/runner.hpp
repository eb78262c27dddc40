#pragma once

// JSON-in/JSON-out entry points shared by the C API and the command line.

#include <map>
#include <string>

#include <json.hpp>

namespace halfline {

struct RunResult {
  nlohmann::json output;                   // primary document
  std::map<std::string, std::string> csv;  // named CSV tables
  nlohmann::json manifest;                 // subcommand, parameters, tool_version, tolerances
  bool pass = true;                        // all identity checks held
};

/// subcommand: simulate | picard | gauge | phase-check | inflate | cross-validate | batch.
/// Throws halfline::Error on invalid parameters or solver failure.
RunResult run_subcommand(const std::string& subcommand, const nlohmann::json& params);

const char* tool_version();

}  // namespace halfline
