#include "nes/power_model.hpp"

#include <algorithm>
#include <string>

#include "nes/error.hpp"

namespace nes {

namespace {

constexpr std::array<std::string_view, kNumPowerStates> kStateNames = {
    "deep_sleep", "micro_sleep", "active_tx", "idle_tx", "active_rx", "idle_rx"};

}  // namespace

std::string_view to_string(PowerState state) { return kStateNames[index_of(state)]; }

std::optional<PowerState> power_state_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kNumPowerStates; ++i) {
    if (kStateNames[i] == name) return kAllPowerStates[i];
  }
  return std::nullopt;
}

void RelativePowerModel::validate() const {
  for (PowerState s : kAllPowerStates) {
    if (!(power(s) > 0.0)) {
      throw ConfigError("relative power of " + std::string(to_string(s)) + " must be positive");
    }
  }
  if (power(PowerState::ActiveTx) < power(PowerState::IdleTx)) {
    throw ConfigError("active_tx must not be below idle_tx");
  }
  if (power(PowerState::ActiveRx) < power(PowerState::IdleRx)) {
    throw ConfigError("active_rx must not be below idle_rx");
  }
  if (!(power(PowerState::MicroSleep) <
        std::min(power(PowerState::IdleTx), power(PowerState::IdleRx)))) {
    throw ConfigError("micro_sleep must be below both idle states");
  }
  if (deep_sleep_transition_energy < 0.0 || deep_sleep_transition_count_per_cycle < 0) {
    throw ConfigError("deep-sleep transition cost must be non-negative");
  }
  if (!(deep_sleep_qualifying_gap > 0.0)) {
    throw ConfigError("deep-sleep qualifying gap must be positive");
  }
}

void StateTimeline::append(PowerState state, std::int64_t duration) {
  if (duration <= 0) return;
  if (!segments.empty() && segments.back().state == state) {
    segments.back().duration += duration;
    return;
  }
  const std::int64_t start =
      segments.empty() ? 0 : segments.back().start + segments.back().duration;
  segments.push_back({start, duration, state});
}

std::int64_t StateTimeline::covered_symbols() const {
  if (segments.empty()) return 0;
  return segments.back().start + segments.back().duration;
}

std::array<std::int64_t, kNumPowerStates> StateTimeline::dwell_symbols() const {
  std::array<std::int64_t, kNumPowerStates> dwell{};
  for (const auto& seg : segments) dwell[index_of(seg.state)] += seg.duration;
  return dwell;
}

PowerState StateTimeline::state_at(std::int64_t symbol) const {
  auto it = std::upper_bound(segments.begin(), segments.end(), symbol,
                             [](std::int64_t s, const StateSegment& seg) { return s < seg.start; });
  if (it == segments.begin() || symbol >= covered_symbols() || symbol < 0) {
    throw OutOfRangeError("symbol outside the timeline");
  }
  return std::prev(it)->state;
}

EnergyLedger integrate_energy(const StateTimeline& timeline, const RelativePowerModel& model) {
  std::int64_t cursor = 0;
  for (const auto& seg : timeline.segments) {
    if (seg.start != cursor || seg.duration <= 0) {
      throw MalformedTimelineError("timeline segment at symbol " + std::to_string(seg.start) +
                                   " does not continue from symbol " + std::to_string(cursor));
    }
    cursor += seg.duration;
  }
  if (cursor != timeline.grid.horizon_symbols()) {
    throw MalformedTimelineError("timeline covers " + std::to_string(cursor) + " of " +
                                 std::to_string(timeline.grid.horizon_symbols()) + " symbols");
  }

  // Integer dwell counts keep the weighting exact; one multiply per state.
  EnergyLedger ledger;
  const auto dwell = timeline.dwell_symbols();
  double states_total = 0.0;
  for (PowerState s : kAllPowerStates) {
    const double e = model.power(s) * timeline.grid.seconds_from_symbols(dwell[index_of(s)]);
    ledger.per_state_energy[index_of(s)] = e;
    states_total += e;
  }
  std::int64_t downs = 0;
  for (const auto& t : timeline.transitions) {
    if (t.direction == RampDirection::Down) ++downs;
  }
  ledger.deep_sleep_cycles = downs;
  ledger.transition_energy =
      static_cast<double>(timeline.transitions.size()) * model.deep_sleep_transition_energy;
  ledger.total_energy = states_total + ledger.transition_energy;
  const double horizon = timeline.grid.horizon();
  ledger.mean_power = horizon > 0.0 ? ledger.total_energy / horizon : 0.0;
  return ledger;
}

double deep_sleep_gap_energy(double gap_length_s, const RelativePowerModel& model) {
  // 1e-12 s absorbs decimal round-off at exactly the threshold.
  if (gap_length_s + 1e-12 < model.deep_sleep_qualifying_gap) {
    throw IneligibleGapError("gap of " + std::to_string(gap_length_s * 1e3) +
                             " ms is below the deep-sleep qualifying gap");
  }
  return model.power(PowerState::DeepSleep) * gap_length_s + model.transition_energy_per_cycle();
}

double micro_sleep_gap_energy(double gap_length_s, const RelativePowerModel& model) {
  return model.power(PowerState::MicroSleep) * gap_length_s;
}

double deep_sleep_break_even_gap(const RelativePowerModel& model) {
  return model.transition_energy_per_cycle() /
         (model.power(PowerState::MicroSleep) - model.power(PowerState::DeepSleep));
}

}  // namespace nes
