#include "nes/simulation.hpp"

#include <algorithm>
#include <charconv>

#include "nes/error.hpp"

namespace nes {

namespace {

SignalingConfig lean_signaling(const SimulationSettings& settings) {
  SignalingConfig c = settings.baseline_signaling;
  for (auto& s : c.signals) s.period_ms = settings.lean_period_ms;
  return c;
}

std::optional<double> gate_timer_of(const std::string& id) {
  if (id.size() < 3 || id.compare(0, 2, "TG") != 0) return std::nullopt;
  double tau = 0.0;
  const auto* first = id.data() + 2;
  const auto* last = id.data() + id.size();
  auto [ptr, ec] = std::from_chars(first, last, tau);
  if (ec != std::errc{} || ptr != last || !(tau > 0.0)) return std::nullopt;
  return tau;
}

}  // namespace

double SimulationSettings::effective_warm_up() const {
  if (warm_up_s >= 0.0) return warm_up_s;
  return 2.0 * traffic.delivery_span(traffic.payload.mean_bits());
}

void SimulationSettings::validate() const {
  TimeGrid grid(subcarrier_spacing_khz, 0);
  power.validate();
  link.validate();
  traffic.validate();
  baseline_signaling.validate(grid);
  lean_signaling(*this).validate(grid);
  if (sleep.min_idle_symbols_for_micro < 1) {
    throw ConfigError("micro sleep needs at least one idle symbol");
  }
  if (sleep.rx_guard_symbols < 0) throw ConfigError("rx guard must be non-negative");
}

BenchmarkConfig BenchmarkConfig::preset(const std::string& id, RuCapability capability,
                                        const TrafficProfile& traffic,
                                        const SimulationSettings& settings) {
  BenchmarkConfig c;
  c.id = id;
  c.capability = capability;
  c.traffic = traffic;
  c.sleep_enabled = settings.sleep.sleep_enabled;
  c.gating.bypass_on_high_priority = settings.gate_bypass_on_high_priority;
  if (id == "Baseline") {
    c.signaling = settings.baseline_signaling;
  } else if (id == "Lean160") {
    c.signaling = lean_signaling(settings);
  } else if (auto tau = gate_timer_of(id)) {
    c.signaling = lean_signaling(settings);
    c.gating.tau_ms = *tau;
  } else {
    throw ConfigError("unknown benchmark '" + id + "' (expected Baseline, Lean160 or TG<ms>)");
  }
  return c;
}

std::string BenchmarkConfig::label() const {
  return id + "-" + std::string(to_string(capability));
}

void BenchmarkConfig::validate(const SimulationSettings& settings) const {
  TimeGrid grid = TimeGrid::with_horizon(settings.subcarrier_spacing_khz, horizon_s);
  signaling.validate(grid);
  gating.validate(grid);
  traffic.validate();
  if (seeds < 1) throw ConfigError("need at least one seed");
  if (gate_timer_of(id)) {
    for (const auto& s : signaling.signals) {
      if (s.period_ms != settings.lean_period_ms) {
        throw ConfigError("gated benchmark " + id + " must use lean signaling");
      }
    }
  }
}

RunResult run_single(const BenchmarkConfig& config, const SimulationSettings& settings,
                     double arrival_rate, std::uint64_t seed) {
  config.validate(settings);
  const TimeGrid grid = TimeGrid::with_horizon(settings.subcarrier_spacing_khz, config.horizon_s);
  const double horizon = grid.horizon();

  RunResult result;
  result.seed = seed;
  result.benchmark_id = config.label();
  result.traffic = config.traffic.name;

  // One candidate stream per seed for every load: the rate that would fill
  // the carrier is the common reference.
  const double full_load_rate =
      settings.link.capacity_bps(grid) / settings.traffic.payload.mean_bits();
  std::vector<Session> sessions =
      generate_sessions(seed, arrival_rate, horizon, settings.traffic,
                        settings.effective_warm_up(), full_load_rate);
  const std::vector<DataArrival> arrivals = expand_arrivals(sessions, settings.traffic, horizon);
  const std::vector<SignalingEvent> signaling = build_schedule(config.signaling, grid);

  std::vector<SlotAllocation> allocations;
  TxQueue queue;
  GateState gate;
  std::size_t next_arrival = 0;
  std::size_t next_signal = 0;
  for (std::int64_t slot = 0; slot < grid.horizon_slots(); ++slot) {
    // Data that reached the buffer during earlier slots.
    const std::size_t first_new = next_arrival;
    while (next_arrival < arrivals.size() && grid.slot_of(arrivals[next_arrival].time) < slot) {
      queue.push(arrivals[next_arrival]);
      ++next_arrival;
    }
    const std::span<const DataArrival> fresh(arrivals.data() + first_new,
                                             next_arrival - first_new);
    const GateDecision decision =
        gate_step(gate, config.gating, grid.seconds_from_slots(slot), fresh);
    gate = decision.state;
    if (decision.release) queue.release_all();

    const std::size_t first_signal = next_signal;
    while (next_signal < signaling.size() && signaling[next_signal].slot() == slot) ++next_signal;
    const std::span<const SignalingEvent> in_slot(signaling.data() + first_signal,
                                                  next_signal - first_signal);

    if (queue.released() == 0) continue;
    SlotAllocation alloc = schedule_slot(queue, settings.link, in_slot, slot,
                                         grid.seconds_from_slots(slot + 1), sessions);
    if (alloc.data_prbs() > 0) allocations.push_back(std::move(alloc));
  }

  const ActivityTimeline activity = ActivityTimeline::from_schedule(grid, allocations, signaling);
  StateTimeline timeline =
      classify_symbols(activity, config.capability, config.sleep_enabled,
                       settings.sleep.min_idle_symbols_for_micro, settings.sleep.rx_guard_symbols);
  const std::vector<IdleGap> gaps = find_idle_gaps(activity);
  if (config.sleep_enabled) {
    timeline = apply_deep_sleep_oracle(timeline, gaps, settings.power, config.capability);
  }

  result.energy = integrate_energy(timeline, settings.power);
  result.mean_power = result.energy.mean_power;
  result.deep_sleep_cycles = result.energy.deep_sleep_cycles;
  const auto dwell = timeline.dwell_symbols();
  result.deep_sleep_fraction =
      grid.horizon_symbols() > 0
          ? static_cast<double>(dwell[index_of(PowerState::DeepSleep)]) /
                static_cast<double>(grid.horizon_symbols())
          : 0.0;
  result.measured_utilization = measured_prb_utilization(allocations, settings.link, grid);
  result.gap_histogram = GapHistogram::of(gaps, grid);

  for (const Session& s : sessions) {
    if (s.warm_up()) continue;
    ++result.sessions_offered;
    if (auto tp = session_throughput(s)) {
      ++result.sessions_completed;
      result.throughputs.push_back(*tp);
    }
  }
  result.sessions = std::move(sessions);
  return result;
}

}  // namespace nes
