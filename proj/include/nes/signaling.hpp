#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "nes/core_time.hpp"

namespace nes {

enum class SignalKind : std::uint8_t { SSB, SIB1, CSIRS, PRACH };
enum class LinkDirection : std::uint8_t { DlTransmit, UlReceive };

inline constexpr std::array<SignalKind, 4> kAllSignalKinds = {SignalKind::SSB, SignalKind::SIB1,
                                                              SignalKind::CSIRS, SignalKind::PRACH};

std::string_view to_string(SignalKind kind);
constexpr LinkDirection direction_of(SignalKind kind) {
  return kind == SignalKind::PRACH ? LinkDirection::UlReceive : LinkDirection::DlTransmit;
}

struct SignalFootprint {
  int symbols = 1;
  int prbs = 1;
};

struct SignalSpec {
  double period_ms = 20.0;
  double phase_ms = 0.0;
  SignalFootprint footprint;
};

/// Always-on signaling periodicities and resource footprints.
struct SignalingConfig {
  std::array<SignalSpec, 4> signals;  // indexed by SignalKind

  SignalSpec& operator[](SignalKind k) { return signals[static_cast<std::size_t>(k)]; }
  const SignalSpec& operator[](SignalKind k) const {
    return signals[static_cast<std::size_t>(k)];
  }

  /// Default NR periodicities: PRACH 5 ms, SSB 20 ms, CSI-RS 5 ms, SIB1 50 ms.
  static SignalingConfig baseline();
  /// Every periodicity stretched to 160 ms.
  static SignalingConfig lean(double period_ms = 160.0);

  /// ConfigError unless every period/phase is slot-aligned and every
  /// footprint fits in one slot.
  void validate(const TimeGrid& grid) const;
};

struct SignalingEvent {
  std::int64_t start_symbol = 0;  ///< absolute, first symbol of its slot
  SignalKind kind = SignalKind::SSB;
  LinkDirection direction = LinkDirection::DlTransmit;
  int symbols = 0;
  int prbs = 0;

  std::int64_t slot() const { return start_symbol / TimeGrid::kSymbolsPerSlot; }
};

/// All signaling occasions with start < horizon, sorted by (time, kind).
std::vector<SignalingEvent> build_schedule(const SignalingConfig& config, const TimeGrid& grid);

/// Longest signaling-free interval inside the horizon under zero traffic, s.
double max_idle_gap(const SignalingConfig& config, const TimeGrid& grid);

}  // namespace nes
