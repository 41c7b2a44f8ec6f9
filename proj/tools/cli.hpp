#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "idapbc/model.hpp"

namespace idapbc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitConditionFailed = 2;
inline constexpr int kExitInfeasible = 3;

/// Everything a subcommand needs, after merging the config file and the flags.
struct RunConfig {
  std::string command;
  std::string benchmark;
  Params params;
  std::optional<std::vector<double>> gains;
  std::optional<double> kv;
  std::optional<std::vector<double>> x0;
  double horizon = 10.0;
  double dt = 0.01;
  double rtol = 1e-9;
  double atol = 1e-11;
  double tol = 1e-9;
  int samples = 50;
  std::uint64_t seed = 1;
  bool numeric_case = false;
  std::string out;
  std::string summary;
};

/// Parses `key = value` lines; `#` starts a comment. Keys keep their dots.
std::map<std::string, std::string> parse_config_text(const std::string& text);

/// Applies config keys (benchmark.name, benchmark.params.<p>, design.k, ...) to `cfg`.
void apply_config(const std::map<std::string, std::string>& entries, RunConfig& cfg);

std::vector<double> parse_list(const std::string& text);

/// Runs one command line (without the program name). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace idapbc::cli
