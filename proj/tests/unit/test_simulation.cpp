#include <doctest.h>

#include <sstream>

#include "nes/error.hpp"
#include "nes/harness.hpp"
#include "nes/simulation.hpp"

using namespace nes;

namespace {

BenchmarkConfig cell(const std::string& id, RuCapability cap, double horizon = 2.0) {
  auto c = BenchmarkConfig::preset(id, cap, TrafficProfile::light());
  c.horizon_s = horizon;
  return c;
}

std::string raw_text(const RunResult& r) {
  std::ostringstream os;
  os << raw_csv_row(r);
  write_session_log(os, r);
  return os.str();
}

}  // namespace

TEST_CASE("presets and labels") {
  CHECK(cell("Baseline", RuCapability::MicroOnly).label() == "Baseline-mu");
  const auto tg = cell("TG30", RuCapability::MicroPlusDeep);
  CHECK(tg.label() == "TG30-mu+DS");
  CHECK(tg.gating.tau_ms == 30.0);
  CHECK(tg.signaling[SignalKind::CSIRS].period_ms == 160.0);
  CHECK(cell("Lean160", RuCapability::MicroOnly).gating.tau_ms == 0.0);
  CHECK_THROWS_AS(cell("Turbo", RuCapability::MicroOnly), ConfigError);
  CHECK_THROWS_AS(cell("TG-5", RuCapability::MicroOnly), ConfigError);

  auto bad = cell("TG60", RuCapability::MicroOnly);
  bad.signaling = SignalingConfig::baseline();
  CHECK_THROWS_AS(bad.validate({}), ConfigError);
}

TEST_CASE("default warm-up is twice the delivery span") {
  const SimulationSettings s;
  CHECK(s.effective_warm_up() == doctest::Approx(2.0 * 15e6 / 12e6));
  SimulationSettings fixed;
  fixed.warm_up_s = 0.25;
  CHECK(fixed.effective_warm_up() == 0.25);
}

TEST_CASE("deep-sleep capability changes nothing under baseline signaling") {
  const SimulationSettings s;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto mu = run_single(cell("Baseline", RuCapability::MicroOnly), s, 1.0, seed);
    const auto ds = run_single(cell("Baseline", RuCapability::MicroPlusDeep), s, 1.0, seed);
    CHECK(mu.energy.total_energy == ds.energy.total_energy);
    CHECK(mu.energy.per_state_energy == ds.energy.per_state_energy);
    CHECK(ds.deep_sleep_cycles == 0);
  }
}

TEST_CASE("lean signaling with no traffic sleeps almost all the time") {
  const auto r = run_single(cell("Lean160", RuCapability::MicroPlusDeep, 3.2), {}, 0.0, 1);
  CHECK(r.deep_sleep_fraction > 0.9);
  CHECK(r.deep_sleep_cycles == 20);
  CHECK(r.measured_utilization == 0.0);
  CHECK(r.sessions_offered == 0);
  // Per 160 ms: SSB 4 symbols transmit, PRACH keeps the other 10 symbols of
  // the slot in reception, the remaining 4466 symbols sleep deep, one ramp pair.
  const double per_period = (4 * 119.3 + 10 * 80.33 + 4466 * 1.0) / 28000.0 + 2.0;
  CHECK(r.mean_power == doctest::Approx(per_period / 0.160).epsilon(1e-12));
  const auto baseline = run_single(cell("Baseline", RuCapability::MicroOnly, 3.2), {}, 0.0, 1);
  CHECK(r.mean_power < 0.25 * baseline.mean_power);
}

TEST_CASE("runs are bit-for-bit reproducible") {
  const SimulationSettings s;
  const auto c = cell("TG30", RuCapability::MicroPlusDeep);
  CHECK(raw_text(run_single(c, s, 2.0, 7)) == raw_text(run_single(c, s, 2.0, 7)));
  CHECK(raw_text(run_single(c, s, 2.0, 7)) != raw_text(run_single(c, s, 2.0, 8)));
}

TEST_CASE("the deep-sleep oracle never touches traffic") {
  const SimulationSettings s;
  for (const char* id : {"Lean160", "TG10", "TG60"}) {
    const auto mu = run_single(cell(id, RuCapability::MicroOnly), s, 1.5, 4);
    const auto ds = run_single(cell(id, RuCapability::MicroPlusDeep), s, 1.5, 4);
    CHECK(mu.throughputs == ds.throughputs);
    CHECK(mu.measured_utilization == ds.measured_utilization);
    CHECK(ds.energy.total_energy <= mu.energy.total_energy);
  }
}

TEST_CASE("energy ledger is consistent with the horizon") {
  const auto r = run_single(cell("Lean160", RuCapability::MicroPlusDeep), {}, 1.0, 3);
  double states = 0.0;
  for (double e : r.energy.per_state_energy) states += e;
  CHECK(r.energy.total_energy == doctest::Approx(states + r.energy.transition_energy));
  CHECK(r.mean_power == doctest::Approx(r.energy.total_energy / 2.0));
  CHECK(r.energy.transition_energy == doctest::Approx(2.0 * r.deep_sleep_cycles));
  CHECK(r.sessions_completed <= r.sessions_offered);
  CHECK(r.throughputs.size() == static_cast<std::size_t>(r.sessions_completed));
  // Never faster than the source: the last 30 kbit chunk enters the buffer
  // 499 chunk intervals after the session starts.
  const double fastest = 15e6 / (499 * 30e3 / 12e6) * 1e-6;
  for (double tp : r.throughputs) CHECK(tp <= fastest + 1e-9);
}

TEST_CASE("utilization stays below one and grows with load") {
  const SimulationSettings s;
  double previous = -1.0;
  for (double rate : {0.0, 0.5, 1.5, 3.0}) {
    const auto r = run_single(cell("Baseline", RuCapability::MicroOnly, 5.0), s, rate, 2);
    CHECK(r.measured_utilization >= previous);
    CHECK(r.measured_utilization < 1.0);
    previous = r.measured_utilization;
  }
}
