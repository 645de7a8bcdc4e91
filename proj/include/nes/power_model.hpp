#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "nes/core_time.hpp"

namespace nes {

enum class PowerState : std::uint8_t { DeepSleep, MicroSleep, ActiveTx, IdleTx, ActiveRx, IdleRx };

inline constexpr std::size_t kNumPowerStates = 6;
inline constexpr std::array<PowerState, kNumPowerStates> kAllPowerStates = {
    PowerState::DeepSleep, PowerState::MicroSleep, PowerState::ActiveTx,
    PowerState::IdleTx,    PowerState::ActiveRx,   PowerState::IdleRx};

std::string_view to_string(PowerState state);
/// Accepts the config spelling (deep_sleep, micro_sleep, active_tx, ...).
std::optional<PowerState> power_state_from_string(std::string_view name);

constexpr std::size_t index_of(PowerState s) { return static_cast<std::size_t>(s); }

/// gNB power states normalized to deep sleep, plus the deep-sleep ramp costs.
struct RelativePowerModel {
  std::array<double, kNumPowerStates> relative_power = {1.0, 55.0, 119.3, 71.3, 80.33, 70.2};
  /// Energy of one ramp (down or up), in relative-power-seconds.
  double deep_sleep_transition_energy = 1.0;
  int deep_sleep_transition_count_per_cycle = 2;
  /// Minimum idle interval that may be billed as deep sleep, seconds.
  double deep_sleep_qualifying_gap = 0.050;

  double power(PowerState s) const { return relative_power[index_of(s)]; }
  double transition_energy_per_cycle() const {
    return deep_sleep_transition_energy * deep_sleep_transition_count_per_cycle;
  }

  /// Throws ConfigError when any ordering/positivity constraint is broken.
  void validate() const;
};

enum class RampDirection : std::uint8_t { Down, Up };

struct StateSegment {
  std::int64_t start = 0;     ///< symbols
  std::int64_t duration = 0;  ///< symbols
  PowerState state = PowerState::IdleTx;
};

struct TransitionEvent {
  std::int64_t symbol = 0;
  RampDirection direction = RampDirection::Down;
};

/// Run-length power-state timeline over the horizon, in grid symbols.
struct StateTimeline {
  TimeGrid grid;
  std::vector<StateSegment> segments;
  std::vector<TransitionEvent> transitions;

  /// Appends a run, merging with the previous segment when the state matches.
  void append(PowerState state, std::int64_t duration);
  std::int64_t covered_symbols() const;
  /// Per-state dwell in symbols.
  std::array<std::int64_t, kNumPowerStates> dwell_symbols() const;
  /// State of one symbol (binary search over segments).
  PowerState state_at(std::int64_t symbol) const;
};

struct EnergyLedger {
  std::array<double, kNumPowerStates> per_state_energy{};  ///< relative-power-seconds
  double transition_energy = 0.0;
  double total_energy = 0.0;
  double mean_power = 0.0;
  std::int64_t deep_sleep_cycles = 0;

  double state_energy(PowerState s) const { return per_state_energy[index_of(s)]; }
};

/// Energy of a timeline: state power times dwell, plus deep-sleep ramps.
/// MalformedTimelineError on gaps/overlaps or partial coverage.
EnergyLedger integrate_energy(const StateTimeline& timeline, const RelativePowerModel& model);

/// Deep-sleep billing for one idle gap: dwell at deep-sleep power plus one
/// ramp pair. IneligibleGapError below the qualifying gap.
double deep_sleep_gap_energy(double gap_length_s, const RelativePowerModel& model);

/// Micro-sleep billing for the same gap.
double micro_sleep_gap_energy(double gap_length_s, const RelativePowerModel& model);

/// Gap length at which deep- and micro-sleep billing are equal.
double deep_sleep_break_even_gap(const RelativePowerModel& model);

}  // namespace nes
