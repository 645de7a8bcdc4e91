#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "nes/orchestrator.hpp"
#include "nes/simulation.hpp"

namespace nes {

struct CalibrationSettings {
  std::uint64_t seed = 20240901;
  /// Runs seed, seed + 1, ... and averages them; one long run would need
  /// the whole horizon in memory at once.
  int replicas = 10;
  double horizon_s = 300.0;
  double tolerance = 0.005;
  int max_iterations = 20;
};

/// Everything a run of the tool depends on besides the CLI selection.
struct HarnessConfig {
  SimulationSettings sim;
  TrafficProfile low = TrafficProfile::low();
  TrafficProfile light = TrafficProfile::light();
  TrafficProfile medium = TrafficProfile::medium();
  int seeds = 500;
  double horizon_s = 10.0;
  std::uint64_t first_seed = 1;
  CalibrationSettings calibration;
  OrchestratorSettings orchestrator;
  OperatorPolicy policy = default_policy();

  static OperatorPolicy default_policy();
  /// ConfigError for unknown names.
  TrafficProfile traffic(const std::string& name) const;
  void validate() const;
};

/// Reads `key = value` lines. `[section]` headers prefix later keys with
/// "section."; `#` starts a comment. Unknown keys and malformed values are
/// ConfigErrors naming the line.
HarnessConfig parse_config(std::istream& in, const std::string& source = "<config>");
HarnessConfig load_config(const std::filesystem::path& path);

/// Every tunable with its effective value, sorted by key. This is what the
/// manifest digest covers.
std::vector<std::pair<std::string, std::string>> describe(const HarnessConfig& config);

/// Every accepted key with a one-line description.
std::vector<std::pair<std::string, std::string>> config_keys();

/// Shortest decimal that round-trips to the same double.
std::string format_number(double v);

}  // namespace nes
