#pragma once

// Command-line front end: JSON run configs in, CSV/JSON/text out.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tclgen/superop.hpp"

namespace tclgen::cli {

/// Malformed or unknown configuration content. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kOk = 0, kInternal = 1, kConfig = 2, kValidation = 3 };

inline constexpr int kMaxSymbolicOrder = 10;

struct RunConfig {
  ModelSpec model;
  QuadratureConfig quad;
  int order = 2;
  std::optional<CMatrix> rho0;
  std::optional<CMatrix> observable;
  std::vector<double> couplings;
};

/// Strict parse: unknown keys and wrong types raise ConfigError; physical
/// invariants raise ValidationError or DomainError from the library. Relative
/// file paths resolve against base_dir.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Matrix from a row-major array of d*d [re, im] pairs.
CMatrix parse_matrix(const nlohmann::json& value, int d, const std::string& what);

std::string format_double(double x);

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tclgen::cli
