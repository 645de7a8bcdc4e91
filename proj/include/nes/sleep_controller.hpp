#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nes/core_time.hpp"
#include "nes/power_model.hpp"
#include "nes/signaling.hpp"

namespace nes {

struct SlotAllocation;

enum class RuCapability : std::uint8_t { MicroOnly, MicroPlusDeep };

std::string_view to_string(RuCapability c);

/// Per-symbol activity flags over the horizon.
class ActivityTimeline {
 public:
  enum Flag : std::uint8_t { kDlData = 1, kDlSignaling = 2, kUlReceive = 4 };

  explicit ActivityTimeline(const TimeGrid& grid)
      : grid_(grid), flags_(static_cast<std::size_t>(grid.horizon_symbols()), 0) {}

  /// Built from the scheduler's per-slot allocations (any data PRB marks the
  /// whole slot as DL data) and the signaling schedule.
  static ActivityTimeline from_schedule(const TimeGrid& grid,
                                        std::span<const SlotAllocation> allocations,
                                        std::span<const SignalingEvent> signaling);

  const TimeGrid& grid() const { return grid_; }
  std::int64_t size() const { return static_cast<std::int64_t>(flags_.size()); }

  void mark(std::int64_t first_symbol, std::int64_t count, Flag flag);
  std::uint8_t flags(std::int64_t symbol) const { return flags_[static_cast<std::size_t>(symbol)]; }
  bool idle(std::int64_t symbol) const { return flags(symbol) == 0; }

 private:
  TimeGrid grid_;
  std::vector<std::uint8_t> flags_;
};

/// Maximal run of symbols without any activity.
struct IdleGap {
  std::int64_t start = 0;   ///< symbols
  std::int64_t length = 0;  ///< symbols
};

struct SleepSettings {
  RuCapability capability = RuCapability::MicroOnly;
  bool sleep_enabled = true;
  /// Idle runs shorter than this stay awake (IdleTx). One symbol by default;
  /// two approximates a ~71 us micro-sleep entry.
  int min_idle_symbols_for_micro = 1;
  /// Idle symbols this close to a UL reception keep the receiver up (IdleRx).
  int rx_guard_symbols = 0;
};

/// Per symbol: any DL activity -> ActiveTx; else UL reception -> ActiveRx;
/// else IdleRx within `rx_guard_symbols` of a UL reception; else MicroSleep
/// when sleeping is allowed, IdleTx otherwise. Never emits DeepSleep.
StateTimeline classify_symbols(const ActivityTimeline& activity, RuCapability capability,
                               bool sleep_enabled, int min_idle_symbols_for_micro = 1,
                               int rx_guard_symbols = 0);

/// Maximal idle gaps in increasing start order.
std::vector<IdleGap> find_idle_gaps(const ActivityTimeline& activity);

/// Offline lower-bound accounting: every gap of at least the qualifying
/// length is re-billed as deep sleep with one ramp pair. Identity for
/// MicroOnly radios. Traffic is never delayed by this step.
StateTimeline apply_deep_sleep_oracle(const StateTimeline& timeline, std::span<const IdleGap> gaps,
                                      const RelativePowerModel& model, RuCapability capability);

/// Counts of idle gaps per length bucket (upper bounds in ms, last is open).
struct GapHistogram {
  static constexpr std::array<double, 6> kUpperMs = {1.0, 5.0, 10.0, 20.0, 50.0, 100.0};
  static constexpr std::size_t kBuckets = kUpperMs.size() + 1;
  std::array<std::int64_t, kBuckets> counts{};

  static GapHistogram of(std::span<const IdleGap> gaps, const TimeGrid& grid);
  static std::string bucket_label(std::size_t i);
};

}  // namespace nes
