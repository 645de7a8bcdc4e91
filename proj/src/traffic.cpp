#include "nes/traffic.hpp"

#include <algorithm>
#include <cmath>

#include "nes/error.hpp"
#include "nes/scheduler.hpp"

namespace nes {

namespace {

constexpr double kMegabyteBits = 8e6;

struct SizeClass {
  double probability;
  double min_mb;
  double max_mb;
};

// Session classes by share of sessions: small below 1 MB, medium 1-20 MB,
// large above 20 MB (capped at 40 MB).
constexpr std::array<SizeClass, 3> kSessionClasses = {
    SizeClass{0.95, 0.1, 1.0}, SizeClass{0.03, 1.0, 20.0}, SizeClass{0.02, 20.0, 40.0}};

}  // namespace

TrafficProfile TrafficProfile::preset(const std::string& name) {
  if (name == "Low") return low();
  if (name == "Light") return light();
  if (name == "Medium") return medium();
  throw ConfigError("unknown traffic profile '" + name + "'");
}

void TrafficProfile::validate() const {
  if (target_mean_prb_utilization < 0.0) {
    throw ConfigError("target utilization must be non-negative");
  }
  if (target_mean_prb_utilization >= 1.0) {
    throw InfeasibleLoadError("target utilization " + std::to_string(target_mean_prb_utilization) +
                              " is not below 1");
  }
}

int LinkModel::prbs_for(double bits) const {
  if (bits <= 0.0) return 0;
  // Tolerate round-off from fractional per-PRB capacities.
  return static_cast<int>(std::ceil(bits / bits_per_prb_per_slot - 1e-9));
}

void LinkModel::validate() const {
  if (num_prbs <= 0) throw ConfigError("link needs at least one PRB");
  if (!(bits_per_prb_per_slot > 0.0)) throw ConfigError("bits per PRB must be positive");
}

double PayloadDistribution::mean_bits() const {
  if (kind == Kind::Fixed) return fixed_bits;
  double mean_mb = 0.0;
  for (const auto& c : kSessionClasses) mean_mb += c.probability * 0.5 * (c.min_mb + c.max_mb);
  return mean_mb * kMegabyteBits * mix_scale;
}

double PayloadDistribution::sample(SeededRng& rng) const {
  if (kind == Kind::Fixed) return fixed_bits;
  const double u = rng.uniform();
  const double v = rng.uniform();
  double acc = 0.0;
  for (const auto& c : kSessionClasses) {
    acc += c.probability;
    if (u < acc || &c == &kSessionClasses.back()) {
      return std::round((c.min_mb + v * (c.max_mb - c.min_mb)) * kMegabyteBits * mix_scale);
    }
  }
  return fixed_bits;  // unreachable
}

void PayloadDistribution::validate() const {
  if (kind == Kind::Fixed && !(fixed_bits > 0.0)) throw ConfigError("payload must be positive");
  if (kind == Kind::SessionMix && !(mix_scale > 0.0)) {
    throw ConfigError("session-mix scale must be positive");
  }
}

void TrafficModel::validate() const {
  payload.validate();
  if (source_rate_bps < 0.0) throw ConfigError("source rate must be non-negative");
  if (source_rate_bps > 0.0 && !(chunk_bits > 0.0)) {
    throw ConfigError("chunk size must be positive when a source rate is set");
  }
  if (priority_fraction < 0.0 || priority_fraction > 1.0) {
    throw ConfigError("priority fraction must lie in [0, 1]");
  }
  if (num_ues <= 0) throw ConfigError("need at least one UE");
}

double analytic_arrival_rate(const TrafficProfile& profile, const LinkModel& link,
                             const TimeGrid& grid, double mean_payload_bits) {
  profile.validate();
  link.validate();
  if (!(mean_payload_bits > 0.0)) throw ConfigError("mean payload must be positive");
  return profile.target_mean_prb_utilization * link.capacity_bps(grid) / mean_payload_bits;
}

CalibrationResult calibrate_arrival_rate(const TrafficProfile& profile, const LinkModel& link,
                                         const TimeGrid& grid, double mean_payload_bits,
                                         const std::function<double(double)>& measure_utilization,
                                         double tolerance, int max_iterations) {
  CalibrationResult result;
  result.analytic_rate = analytic_arrival_rate(profile, link, grid, mean_payload_bits);
  result.rate = result.analytic_rate;
  const double target = profile.target_mean_prb_utilization;
  if (target == 0.0) return result;

  for (int it = 0; it <= max_iterations; ++it) {
    result.measured_utilization = measure_utilization(result.rate);
    result.iterations = it;
    if (std::abs(result.measured_utilization - target) <= tolerance) return result;
    if (it == max_iterations) break;
    // Utilization is close to linear in the rate; cap the step so an empty
    // realization does not blow the rate up.
    const double ratio = result.measured_utilization > 0.0
                             ? target / result.measured_utilization
                             : 2.0;
    result.rate *= std::clamp(ratio, 0.5, 2.0);
  }
  throw CalibrationError("arrival-rate calibration for " + profile.name +
                         " did not converge: measured " +
                         std::to_string(result.measured_utilization) + " vs target " +
                         std::to_string(target));
}

std::vector<Session> generate_sessions(std::uint64_t seed, double rate, double horizon_s,
                                       const TrafficModel& model, double warm_up_s,
                                       double reference_rate) {
  if (rate < 0.0) throw ConfigError("arrival rate must be non-negative");
  if (warm_up_s < 0.0) throw ConfigError("warm-up must be non-negative");
  model.validate();
  std::vector<Session> sessions;
  if (rate == 0.0) return sessions;
  const double reference = std::max(rate, reference_rate);
  const double keep = rate / reference;

  SeededRng arrivals(seed, "traffic.arrivals");
  SeededRng thinning(seed, "traffic.thinning");
  SeededRng ues(seed, "traffic.ue");
  SeededRng sizes(seed, "traffic.payload");
  SeededRng priorities(seed, "traffic.priority");

  double t = -warm_up_s;
  while (true) {
    t += arrivals.exponential(reference);
    if (t >= horizon_s) break;
    // Every candidate consumes the same draws whether or not it is kept.
    const bool kept = thinning.uniform() < keep;
    const auto ue = ues.uniform_index(static_cast<std::uint64_t>(model.num_ues));
    const double payload = model.payload.sample(sizes);
    const bool high = priorities.bernoulli(model.priority_fraction);
    if (!kept) continue;
    Session s;
    s.id = static_cast<std::uint32_t>(sessions.size());
    s.ue_id = static_cast<std::uint32_t>(ue);
    s.arrival_time = t;
    s.payload_bits = payload;
    s.priority = high ? Priority::High : Priority::Normal;
    s.source_rate_bps = model.source_rate_bps;
    sessions.push_back(s);
  }
  return sessions;
}

std::vector<DataArrival> expand_arrivals(std::vector<Session>& sessions,
                                         const TrafficModel& model, double horizon_s) {
  std::vector<DataArrival> out;
  for (std::uint32_t i = 0; i < sessions.size(); ++i) {
    Session& s = sessions[i];
    const double step = s.source_rate_bps > 0.0 ? model.chunk_bits : s.payload_bits;
    const double interval = s.source_rate_bps > 0.0 ? step / s.source_rate_bps : 0.0;
    double offset = 0.0;
    for (std::int64_t k = 0; offset < s.payload_bits; ++k) {
      const double bits = std::min(step, s.payload_bits - offset);
      const double t = s.arrival_time + static_cast<double>(k) * interval;
      offset += bits;
      if (t >= horizon_s) break;
      if (t < 0.0) {
        s.delivered_bits += bits;
        continue;
      }
      out.push_back({t, i, bits, s.priority});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const DataArrival& a, const DataArrival& b) {
    return a.time != b.time ? a.time < b.time : a.session < b.session;
  });
  return out;
}

double measured_prb_utilization(std::span<const SlotAllocation> allocations,
                                const LinkModel& link, const TimeGrid& grid) {
  if (grid.horizon_slots() == 0) return 0.0;
  std::int64_t prbs = 0;
  for (const auto& a : allocations) prbs += a.data_prbs();
  return static_cast<double>(prbs) /
         (static_cast<double>(link.num_prbs) * static_cast<double>(grid.horizon_slots()));
}

}  // namespace nes
