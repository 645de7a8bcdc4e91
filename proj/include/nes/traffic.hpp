#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nes/core_time.hpp"

namespace nes {

struct SlotAllocation;

/// Load level expressed as time-averaged data-PRB utilization.
struct TrafficProfile {
  std::string name = "Low";
  double target_mean_prb_utilization = 0.065;

  static TrafficProfile low() { return {"Low", 0.065}; }
  static TrafficProfile light() { return {"Light", 0.25}; }
  static TrafficProfile medium() { return {"Medium", 0.42}; }
  /// Low/Light/Medium by name; ConfigError otherwise.
  static TrafficProfile preset(const std::string& name);

  void validate() const;
};

/// Fixed spectral-efficiency link: every PRB carries the same number of bits.
struct LinkModel {
  int num_prbs = 51;
  double bits_per_prb_per_slot = 100e6 / (51.0 * 2000.0);

  double slot_capacity_bits() const { return num_prbs * bits_per_prb_per_slot; }
  double capacity_bps(const TimeGrid& grid) const {
    return slot_capacity_bits() * static_cast<double>(grid.slots_per_second());
  }
  /// PRBs needed to carry `bits` (rounded up).
  int prbs_for(double bits) const;

  void validate() const;
};

enum class Priority : std::uint8_t { Normal, High };

/// One downlink payload for one UE.
struct Session {
  std::uint32_t id = 0;
  std::uint32_t ue_id = 0;
  double arrival_time = 0.0;  ///< seconds; negative for warm-up sessions
  double payload_bits = 0.0;
  Priority priority = Priority::Normal;
  /// Rate at which the payload reaches the gNB buffer; 0 means all at once.
  double source_rate_bps = 0.0;
  std::optional<double> completion_time;
  double delivered_bits = 0.0;

  bool warm_up() const { return arrival_time < 0.0; }
  bool completed() const { return completion_time.has_value(); }
};

/// Payload size law.
struct PayloadDistribution {
  enum class Kind : std::uint8_t { Fixed, SessionMix };

  Kind kind = Kind::Fixed;
  double fixed_bits = 15e6;
  /// Scales the small/medium/large session classes (95/3/2 %) down to
  /// desk-scale runs.
  double mix_scale = 0.1;

  static PayloadDistribution fixed(double bits) { return {Kind::Fixed, bits, 0.1}; }
  static PayloadDistribution session_mix(double scale) { return {Kind::SessionMix, 0.0, scale}; }

  double mean_bits() const;
  double sample(SeededRng& rng) const;
  void validate() const;
};

/// Everything besides the rate that shapes generated traffic.
struct TrafficModel {
  PayloadDistribution payload;
  /// Per-session delivery rate into the gNB buffer (0 = whole payload at arrival).
  double source_rate_bps = 12e6;
  /// Granularity of source delivery.
  double chunk_bits = 30e3;
  double priority_fraction = 0.0;
  int num_ues = 20;

  /// Time one session needs to reach the gNB buffer completely.
  double delivery_span(double payload_bits) const {
    return source_rate_bps > 0.0 ? payload_bits / source_rate_bps : 0.0;
  }
  void validate() const;
};

/// Chunk of session data entering the gNB buffer.
struct DataArrival {
  double time = 0.0;
  std::uint32_t session = 0;  ///< index into the session list
  double bits = 0.0;
  Priority priority = Priority::Normal;
};

/// Open-loop arrival rate: target * capacity / mean payload (sessions/s).
/// InfeasibleLoadError for target >= 1.
double analytic_arrival_rate(const TrafficProfile& profile, const LinkModel& link,
                             const TimeGrid& grid, double mean_payload_bits);

struct CalibrationResult {
  double analytic_rate = 0.0;
  double rate = 0.0;
  double measured_utilization = 0.0;
  int iterations = 0;
};

/// Starts from the analytic rate and rescales it multiplicatively until the
/// measured utilization is within `tolerance` of the target.
/// CalibrationError after `max_iterations` unsuccessful refinements.
CalibrationResult calibrate_arrival_rate(const TrafficProfile& profile, const LinkModel& link,
                                         const TimeGrid& grid, double mean_payload_bits,
                                         const std::function<double(double)>& measure_utilization,
                                         double tolerance = 0.005, int max_iterations = 20);

/// Poisson sessions of the given rate over [-warm_up, horizon), sorted by
/// arrival. Arrival times, UE ids, payloads and priorities come from
/// independent streams of `seed`, so the arrival process does not depend on
/// how UEs are enumerated.
///
/// Candidates are drawn at `reference_rate` (at least `rate`) and each is
/// kept with probability rate / reference_rate. With a shared reference the
/// sessions of a lower rate are a subset of those of a higher rate for the
/// same seed, so loads can be compared seed by seed.
std::vector<Session> generate_sessions(std::uint64_t seed, double rate, double horizon_s,
                                       const TrafficModel& model, double warm_up_s = 0.0,
                                       double reference_rate = 0.0);

/// Splits sessions into buffer arrivals at the source rate. Arrivals before
/// t = 0 are credited to the session as already delivered and dropped;
/// arrivals at or after the horizon are dropped.
std::vector<DataArrival> expand_arrivals(std::vector<Session>& sessions,
                                         const TrafficModel& model, double horizon_s);

/// Allocated data PRBs over all PRB-slots of the horizon.
double measured_prb_utilization(std::span<const SlotAllocation> allocations,
                                const LinkModel& link, const TimeGrid& grid);

}  // namespace nes
