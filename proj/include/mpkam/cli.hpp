#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpkam/errors.hpp"
#include "mpkam/linalg.hpp"
#include "mpkam/sde.hpp"

namespace mpkam::cli {

enum ExitCode : int {
  kSuccess = 0,
  kValidation = 2,
  kNumerical = 3,
  kUnderflow = 4,
};

/// A config problem tied to a dotted field path such as `grid.N`.
class ConfigError : public ContractViolation {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : ContractViolation(field + ": " + message), field_(field) {}
  [[nodiscard]] const std::string& field() const { return field_; }

 private:
  std::string field_;
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"simulate", "om-eval", "mpp",  "tube",
                                          "ldp",      "kam-scan", "check-conditions"};
  return c;
}

struct RunConfig {
  std::string command;
  std::optional<std::string> system;
  std::map<std::string, double> system_params;
  std::string field;
  std::map<std::string, double> field_params;
  double T = 1.0;
  int N = 1000;
  double gamma = 1.0;
  std::size_t M = 1000;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::euler_maruyama;
  std::optional<Vector> x0;
  nlohmann::json options = nlohmann::json::object();
  std::filesystem::path output_dir = "mpkam_out";
  /// Zero-hit Monte Carlo estimates exit with kUnderflow instead of success.
  bool escalate_underflow = false;
  nlohmann::json raw;
};

/// Validates and normalises a JSON config; throws ConfigError.
RunConfig parse_config(const nlohmann::json& config);

struct RunOutcome {
  int exit_code = kSuccess;
  std::string message;
  std::vector<std::string> artifacts;
};

/// Executes the command, writing artifacts and `manifest.json` into the
/// output directory. Never throws for module errors; they map to exit codes.
RunOutcome run(const RunConfig& config, std::ostream& log);

/// Parses then runs. Validation failures still produce a nonzero outcome.
RunOutcome run_json(const nlohmann::json& config, std::ostream& log);

}  // namespace mpkam::cli
