#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nes/core_time.hpp"
#include "nes/power_model.hpp"
#include "nes/scheduler.hpp"
#include "nes/signaling.hpp"
#include "nes/sleep_controller.hpp"
#include "nes/traffic.hpp"

namespace nes {

/// Knobs shared by every cell of the benchmark matrix.
struct SimulationSettings {
  double subcarrier_spacing_khz = 30.0;
  RelativePowerModel power;
  LinkModel link;
  TrafficModel traffic;
  SleepSettings sleep;  ///< capability is taken from the benchmark
  SignalingConfig baseline_signaling = SignalingConfig::baseline();
  double lean_period_ms = 160.0;
  bool gate_bypass_on_high_priority = true;
  /// Sessions are generated from -warm_up so the horizon starts in steady
  /// state; negative selects twice the mean delivery span.
  double warm_up_s = -1.0;

  double effective_warm_up() const;
  void validate() const;
};

/// One cell of the benchmark matrix.
struct BenchmarkConfig {
  std::string id = "Baseline";
  SignalingConfig signaling = SignalingConfig::baseline();
  GatingPolicy gating;
  RuCapability capability = RuCapability::MicroOnly;
  bool sleep_enabled = true;
  TrafficProfile traffic = TrafficProfile::low();
  int seeds = 500;
  double horizon_s = 10.0;

  /// Baseline, Lean160, TG10, TG30 or TG60 with the given RU variant.
  static BenchmarkConfig preset(const std::string& id, RuCapability capability,
                                const TrafficProfile& traffic,
                                const SimulationSettings& settings = {});

  /// "<id>-mu" or "<id>-mu+DS".
  std::string label() const;
  /// ConfigError on inconsistent settings (e.g. gating without lean signaling
  /// on a TG benchmark).
  void validate(const SimulationSettings& settings) const;
};

struct RunResult {
  std::uint64_t seed = 0;
  std::string benchmark_id;
  std::string traffic;
  EnergyLedger energy;
  double mean_power = 0.0;
  std::vector<double> throughputs;  ///< Mb/s, completed non-warm-up sessions
  double measured_utilization = 0.0;
  std::int64_t deep_sleep_cycles = 0;
  double deep_sleep_fraction = 0.0;
  GapHistogram gap_histogram;
  std::int64_t sessions_offered = 0;
  std::int64_t sessions_completed = 0;
  std::vector<Session> sessions;  ///< completion log, in arrival order
};

/// Full pipeline for one seed: sessions -> signaling -> slot loop (gate,
/// schedule, activity) -> symbol states -> deep-sleep oracle -> energy.
/// Same inputs always give bit-identical results.
RunResult run_single(const BenchmarkConfig& config, const SimulationSettings& settings,
                     double arrival_rate, std::uint64_t seed);

}  // namespace nes
