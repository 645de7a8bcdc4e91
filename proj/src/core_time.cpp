#include "nes/core_time.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "nes/error.hpp"

namespace nes {

namespace {

// Inputs within this fraction of a symbol of a grid boundary snap onto it, so
// decimal renderings such as 35.714 us land on the boundary they denote.
constexpr double kSnapSymbols = 1e-4;

}  // namespace

TimeGrid::TimeGrid(double subcarrier_spacing_khz, std::int64_t horizon_slots)
    : scs_khz_(subcarrier_spacing_khz), slots_per_second_(0), horizon_slots_(horizon_slots) {
  const double ratio = subcarrier_spacing_khz / 15.0;
  const double exponent = std::log2(ratio);
  if (!(ratio >= 1.0) || std::abs(exponent - std::round(exponent)) > 1e-12 || exponent > 6) {
    throw ConfigError("subcarrier spacing must be 15 kHz * 2^n, got " +
                      std::to_string(subcarrier_spacing_khz));
  }
  slots_per_second_ = 1000LL << static_cast<int>(std::round(exponent));
  if (horizon_slots < 0) throw ConfigError("horizon must be non-negative");
}

TimeGrid TimeGrid::with_horizon(double subcarrier_spacing_khz, double horizon_s) {
  TimeGrid probe(subcarrier_spacing_khz, 0);
  if (!(horizon_s >= 0.0)) throw ConfigError("horizon must be non-negative");
  return TimeGrid(subcarrier_spacing_khz, probe.slots_in(horizon_s));
}

std::int64_t TimeGrid::floor_symbols(double seconds) const {
  const double exact = seconds * static_cast<double>(slots_per_second_ * kSymbolsPerSlot);
  const double nearest = std::round(exact);
  if (std::abs(exact - nearest) <= kSnapSymbols) return static_cast<std::int64_t>(nearest);
  return static_cast<std::int64_t>(std::floor(exact));
}

std::int64_t TimeGrid::slots_in(double seconds) const {
  const double exact = seconds * static_cast<double>(slots_per_second_);
  const double nearest = std::round(exact);
  if (std::abs(exact - nearest) > kSnapSymbols / kSymbolsPerSlot) {
    throw ConfigError("duration " + std::to_string(seconds * 1e3) +
                      " ms is not a whole number of slots");
  }
  return static_cast<std::int64_t>(nearest);
}

std::int64_t TimeGrid::symbols_ceil(double seconds) const {
  const double exact = seconds * static_cast<double>(slots_per_second_ * kSymbolsPerSlot);
  const double nearest = std::round(exact);
  if (std::abs(exact - nearest) <= kSnapSymbols) return static_cast<std::int64_t>(nearest);
  return static_cast<std::int64_t>(std::ceil(exact));
}

std::int64_t TimeGrid::slot_of(double seconds) const {
  const std::int64_t sym = floor_symbols(seconds);
  // Floor division for negative (warm-up) times.
  return sym >= 0 ? sym / kSymbolsPerSlot : -((-sym + kSymbolsPerSlot - 1) / kSymbolsPerSlot);
}

SymbolPosition TimeGrid::symbol_index(double t) const {
  if (!(t >= 0.0)) throw OutOfRangeError("time before the start of the horizon");
  const std::int64_t sym = floor_symbols(t);
  if (sym >= horizon_symbols()) throw OutOfRangeError("time beyond the horizon");
  return {sym / kSymbolsPerSlot, static_cast<int>(sym % kSymbolsPerSlot)};
}

double TimeGrid::start_time(SymbolPosition pos) const {
  return seconds_from_symbols(pos.slot * kSymbolsPerSlot + pos.symbol);
}

SeededRng::SeededRng(std::uint64_t seed, std::string_view stream_id)
    : seed_(seed), engine_(mix64(seed ^ mix64(fnv1a64(stream_id)))) {}

double SeededRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t SeededRng::uniform_index(std::uint64_t n) {
  if (n == 0) throw ConfigError("uniform_index needs a non-empty range");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

double SeededRng::exponential(double rate) {
  if (!(rate > 0.0)) throw ConfigError("exponential rate must be positive");
  return -std::log1p(-uniform()) / rate;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace nes
