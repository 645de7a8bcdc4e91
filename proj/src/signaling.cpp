#include "nes/signaling.hpp"

#include <algorithm>
#include <string>

#include "nes/error.hpp"

namespace nes {

std::string_view to_string(SignalKind kind) {
  switch (kind) {
    case SignalKind::SSB: return "SSB";
    case SignalKind::SIB1: return "SIB1";
    case SignalKind::CSIRS: return "CSIRS";
    case SignalKind::PRACH: return "PRACH";
  }
  return "?";
}

SignalingConfig SignalingConfig::baseline() {
  SignalingConfig c;
  c[SignalKind::SSB] = {20.0, 0.0, {4, 20}};
  c[SignalKind::SIB1] = {50.0, 0.0, {2, 48}};
  c[SignalKind::CSIRS] = {5.0, 0.0, {1, 51}};
  c[SignalKind::PRACH] = {5.0, 0.0, {14, 12}};
  return c;
}

SignalingConfig SignalingConfig::lean(double period_ms) {
  SignalingConfig c = baseline();
  for (auto& s : c.signals) s.period_ms = period_ms;
  return c;
}

void SignalingConfig::validate(const TimeGrid& grid) const {
  for (SignalKind k : kAllSignalKinds) {
    const SignalSpec& s = (*this)[k];
    const std::string name(to_string(k));
    if (!(s.period_ms > 0.0)) throw ConfigError(name + " period must be positive");
    grid.slots_in(s.period_ms * 1e-3);
    if (s.phase_ms < 0.0 || s.phase_ms >= s.period_ms) {
      throw ConfigError(name + " phase must lie in [0, period)");
    }
    grid.slots_in(s.phase_ms * 1e-3);
    if (s.footprint.symbols < 1 || s.footprint.symbols > TimeGrid::kSymbolsPerSlot) {
      throw ConfigError(name + " footprint must span 1..14 symbols");
    }
    if (s.footprint.prbs < 0) throw ConfigError(name + " footprint PRBs must be non-negative");
  }
}

std::vector<SignalingEvent> build_schedule(const SignalingConfig& config, const TimeGrid& grid) {
  config.validate(grid);
  std::vector<SignalingEvent> events;
  for (SignalKind k : kAllSignalKinds) {
    const SignalSpec& s = config[k];
    const std::int64_t period = grid.slots_in(s.period_ms * 1e-3);
    for (std::int64_t slot = grid.slots_in(s.phase_ms * 1e-3); slot < grid.horizon_slots();
         slot += period) {
      events.push_back({slot * TimeGrid::kSymbolsPerSlot, k, direction_of(k), s.footprint.symbols,
                        s.footprint.prbs});
    }
  }
  std::sort(events.begin(), events.end(), [](const SignalingEvent& a, const SignalingEvent& b) {
    return a.start_symbol != b.start_symbol ? a.start_symbol < b.start_symbol : a.kind < b.kind;
  });
  return events;
}

double max_idle_gap(const SignalingConfig& config, const TimeGrid& grid) {
  const auto events = build_schedule(config, grid);
  std::int64_t longest = 0;
  std::int64_t busy_until = 0;
  for (const auto& e : events) {
    longest = std::max(longest, e.start_symbol - busy_until);
    busy_until = std::max(busy_until, e.start_symbol + e.symbols);
  }
  longest = std::max(longest, grid.horizon_symbols() - busy_until);
  return grid.seconds_from_symbols(longest);
}

}  // namespace nes
