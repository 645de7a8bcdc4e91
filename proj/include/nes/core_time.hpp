#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace nes {

/// Slot/symbol coordinates of a point on the time grid.
struct SymbolPosition {
  std::int64_t slot = 0;
  int symbol = 0;

  friend bool operator==(const SymbolPosition&, const SymbolPosition&) = default;
};

/// NR time grid with normal cyclic prefix.
///
/// Simulated time is an integer symbol counter; seconds only appear at the
/// boundaries (configuration input and KPI output). Periodicities are
/// validated to be whole numbers of slots so schedules never drift.
class TimeGrid {
 public:
  static constexpr int kSymbolsPerSlot = 14;

  TimeGrid() : TimeGrid(30.0, 0) {}

  /// Throws ConfigError unless the spacing is 15 kHz * 2^n.
  TimeGrid(double subcarrier_spacing_khz, std::int64_t horizon_slots);

  /// Horizon given in seconds; must be a whole number of slots.
  static TimeGrid with_horizon(double subcarrier_spacing_khz, double horizon_s);

  double subcarrier_spacing_khz() const { return scs_khz_; }
  int symbols_per_slot() const { return kSymbolsPerSlot; }
  std::int64_t slots_per_second() const { return slots_per_second_; }
  double slot_duration() const { return 1.0 / static_cast<double>(slots_per_second_); }
  double symbol_duration() const { return slot_duration() / kSymbolsPerSlot; }

  std::int64_t horizon_slots() const { return horizon_slots_; }
  std::int64_t horizon_symbols() const { return horizon_slots_ * kSymbolsPerSlot; }
  double horizon() const { return seconds_from_slots(horizon_slots_); }

  double seconds_from_slots(std::int64_t slots) const {
    return static_cast<double>(slots) / static_cast<double>(slots_per_second_);
  }
  double seconds_from_symbols(std::int64_t symbols) const {
    return static_cast<double>(symbols) /
           static_cast<double>(slots_per_second_ * kSymbolsPerSlot);
  }

  /// Number of whole slots in `seconds`; ConfigError if not slot-aligned.
  std::int64_t slots_in(double seconds) const;
  /// Number of whole symbols in `seconds`, rounded up (used for thresholds).
  std::int64_t symbols_ceil(double seconds) const;
  /// Slot containing time t (t may lie outside the horizon).
  std::int64_t slot_of(double seconds) const;

  /// Slot and symbol containing t. OutOfRangeError unless 0 <= t < horizon.
  SymbolPosition symbol_index(double t) const;
  double start_time(SymbolPosition pos) const;

 private:
  std::int64_t floor_symbols(double seconds) const;

  double scs_khz_;
  std::int64_t slots_per_second_;
  std::int64_t horizon_slots_;
};

/// Deterministic random stream keyed by (seed, stream label).
///
/// Draws are produced from the exactly-specified mt19937_64 engine and
/// converted with hand-written transforms, so the sequence is identical
/// across standard libraries and platforms.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::string_view stream_id);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n); n > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Exponential with the given rate (> 0).
  double exponential(double rate);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer, also used for config digests.
std::uint64_t mix64(std::uint64_t x);
/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view text);

}  // namespace nes
