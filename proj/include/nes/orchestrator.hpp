#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nes/simulation.hpp"

namespace nes {

enum class FeatureCategory : std::uint8_t { Capability, CreatesIdleWindows, UtilizesIdleWindows };

std::string_view to_string(FeatureCategory c);
std::optional<FeatureCategory> feature_category_from_string(std::string_view s);

struct Timescale {
  double min_s = 0.0;
  double max_s = 0.0;
};

struct TunableRange {
  double min = 0.0;
  double max = 0.0;
};

struct FeatureDescriptor {
  std::string id;
  FeatureCategory category = FeatureCategory::CreatesIdleWindows;
  std::string layer;
  Timescale timescale;
  std::vector<std::string> depends_on;      ///< hard prerequisites
  std::vector<std::string> conflicts_with;  ///< may never be active together
  std::vector<std::string> advises;         ///< soft pairing hints, never enforced
  std::map<std::string, TunableRange> tunables;
  bool simulatable = false;
};

/// Immutable set of feature descriptors. Construction checks that every
/// reference resolves and that no feature both needs and excludes the same id.
class FeatureRegistry {
 public:
  explicit FeatureRegistry(std::vector<FeatureDescriptor> features);

  /// Taxonomy rows plus the features the simulator can actuate.
  static FeatureRegistry builtin();
  static FeatureRegistry load(const std::filesystem::path& path);
  /// One feature per line:
  ///   id | category | layer | min..max | depends | conflicts | advises | simulatable | tunables
  /// Lists are comma separated, "-" means empty. Durations take us/ms/s/min.
  static FeatureRegistry parse(std::istream& in, const std::string& source = "<registry>");

  const FeatureDescriptor* find(std::string_view id) const;
  /// UnknownFeatureError for ids not in the registry.
  const FeatureDescriptor& at(std::string_view id) const;
  std::span<const FeatureDescriptor> features() const { return features_; }

 private:
  std::vector<FeatureDescriptor> features_;
};

struct Violation {
  enum class Kind : std::uint8_t { MissingDependency, Conflict };
  Kind kind = Kind::MissingDependency;
  std::string feature;
  std::string other;

  std::string message() const;
  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool valid() const { return violations.empty(); }
};

/// Checks dependency closure and pairwise conflicts. Hardware capabilities
/// count as present unless listed in `absent_capabilities`, so a feature set
/// names only what the orchestrator switches on.
ValidationReport validate_feature_set(const std::set<std::string>& features,
                                      const FeatureRegistry& registry,
                                      const std::set<std::string>& absent_capabilities = {});

enum class KpiMetric : std::uint8_t { MinThroughputMbps, MaxAddedDelayMs, NeighborLoad };

std::string_view to_string(KpiMetric m);
std::optional<KpiMetric> kpi_metric_from_string(std::string_view s);
/// Throughput is bounded from below, delay and neighbor load from above.
bool lower_bounded(KpiMetric m);

struct KpiConstraint {
  KpiMetric metric = KpiMetric::MinThroughputMbps;
  double bound = 0.0;
};

struct OperatorPolicy {
  std::string objective = "minimize-energy";
  std::vector<KpiConstraint> constraints;
  bool unconstrained = false;

  std::optional<double> bound(KpiMetric m) const;
  void validate() const;
};

enum class GuardAction : std::uint8_t { Relax, Deactivate, Rollback };
std::string_view to_string(GuardAction a);

struct Guardrail {
  KpiMetric metric = KpiMetric::MinThroughputMbps;
  double threshold = 0.0;
  GuardAction action = GuardAction::Rollback;
};

struct Plan {
  std::set<std::string> active_features;
  std::map<std::pair<std::string, std::string>, double> configuration;
  std::vector<Guardrail> guardrails;
  std::string diagnostic;

  std::optional<double> tunable(const std::string& feature, const std::string& name) const;
};

struct LoadEstimate {
  double predicted_utilization = 0.0;
  double confidence_margin = 0.1;

  void validate() const;
};

struct OrchestratorSettings {
  std::vector<double> gate_options_ms = {10.0, 30.0, 60.0};
  double lean_period_ms = 160.0;
  int load_window = 5;
  double confidence_margin = 0.1;
  /// Relative distance to a threshold that already triggers relax.
  double guard_margin = 0.1;
  int max_iterations = 3;
};

/// Rule-based selection: lean signaling always, the longest gate timer the
/// delay bound allows, deep sleep when the hardware has it and the predicted
/// idle windows outlast the qualifying gap.
Plan prepare(const OperatorPolicy& policy, const LoadEstimate& estimate,
             const FeatureRegistry& registry, RuCapability capability,
             const SimulationSettings& sim = {}, const OrchestratorSettings& settings = {});

/// Translates a plan into a benchmark cell. NotSimulatableError for plans
/// holding descriptor-only features, ConfigError for invalid plans.
BenchmarkConfig execute(const Plan& plan, const FeatureRegistry& registry,
                        const TrafficProfile& traffic, const SimulationSettings& sim = {});

enum class MonitorAction : std::uint8_t { Keep, Relax, Rollback };
std::string_view to_string(MonitorAction a);

struct KpiSnapshot {
  std::optional<double> min_throughput_mbps;
  std::optional<double> added_delay_ms;
  std::optional<double> neighbor_load;

  static KpiSnapshot from(const RunResult& result);
  std::optional<double> value(KpiMetric m) const;
};

/// Worst action over all guardrails. A breached guardrail applies its own
/// action (deactivate counts as relax); one within `guard_margin` of its
/// threshold relaxes.
MonitorAction monitor(const KpiSnapshot& kpis, std::span<const Guardrail> guardrails,
                      double guard_margin = 0.1);

/// One relaxation step: the next shorter gate timer, then no gating, then no
/// deep sleep. Returns the plan unchanged when nothing is left to relax.
Plan relax(const Plan& plan, const OrchestratorSettings& settings = {});

/// The plan with every energy-saving feature off.
Plan minimal_plan(const Plan& plan, const std::string& diagnostic = {});

/// Moving average over the last `window` samples. EmptyInputError on an
/// empty history.
LoadEstimate estimate_load(std::span<const double> history, int window, double margin);

}  // namespace nes
