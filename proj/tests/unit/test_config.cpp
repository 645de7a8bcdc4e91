#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <string>

#include "nes/config.hpp"
#include "nes/error.hpp"

using namespace nes;

namespace {

HarnessConfig parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test.cfg");
}

}  // namespace

TEST_CASE("an empty file gives the defaults") {
  const auto c = parse_text("");
  CHECK(c.seeds == 500);
  CHECK(c.horizon_s == 10.0);
  CHECK(c.sim.subcarrier_spacing_khz == 30.0);
  CHECK(c.sim.traffic.payload.fixed_bits == 15e6);
  CHECK(c.low.target_mean_prb_utilization == 0.065);
  CHECK(c.policy.bound(KpiMetric::MaxAddedDelayMs) == 100.0);
  CHECK(c.orchestrator.lean_period_ms == 160.0);
}

TEST_CASE("sections, comments and values") {
  const auto c = parse_text(R"(
# comment line
run.seeds = 12   # trailing comment
[power]
micro_sleep = 50
qualifying_gap_ms = 40
[traffic]
payload = mix
mix_scale = 0.5
source_rate_mbps = 0
medium_target = 0.4
[signaling]
lean_period_ms = 80
ssb.prbs = 24
[orchestrator]
gate_options_ms = 10, 20, 40
[policy]
max_neighbor_load = 0.7
min_throughput_mbps = none
)");
  CHECK(c.seeds == 12);
  CHECK(c.sim.power.power(PowerState::MicroSleep) == 50.0);
  CHECK(c.sim.power.deep_sleep_qualifying_gap == doctest::Approx(0.040));
  CHECK(c.sim.traffic.payload.kind == PayloadDistribution::Kind::SessionMix);
  CHECK(c.sim.traffic.source_rate_bps == 0.0);
  CHECK(c.medium.target_mean_prb_utilization == 0.4);
  CHECK(c.traffic("Medium").target_mean_prb_utilization == 0.4);
  CHECK(c.sim.lean_period_ms == 80.0);
  CHECK(c.orchestrator.lean_period_ms == 80.0);
  CHECK(c.sim.baseline_signaling[SignalKind::SSB].footprint.prbs == 24);
  CHECK(c.orchestrator.gate_options_ms == std::vector<double>{10, 20, 40});
  CHECK(c.policy.bound(KpiMetric::NeighborLoad) == 0.7);
  CHECK_FALSE(c.policy.bound(KpiMetric::MinThroughputMbps).has_value());
}

TEST_CASE("errors name the offending line") {
  try {
    parse_text("run.seeds = 3\nrun.colour = blue\n");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("test.cfg:2") != std::string::npos);
    CHECK(std::string(e.what()).find("run.colour") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_text("run.seeds = many\n"), ConfigError);
  CHECK_THROWS_AS(parse_text("run.seeds = 2.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_text("sleep.enabled = perhaps\n"), ConfigError);
  CHECK_THROWS_AS(parse_text("[power\n"), ConfigError);
  CHECK_THROWS_AS(parse_text("just words\n"), ConfigError);
  CHECK_THROWS_AS(parse_text("run.seeds = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_text("grid.subcarrier_spacing_khz = 20\n"), ConfigError);
  CHECK_THROWS_AS(parse_text("power.micro_sleep = 90\n"), ConfigError);
  CHECK_THROWS_AS(parse_text("traffic.payload = huge\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/x.cfg"), IoError);
}

TEST_CASE("describe round-trips through the parser") {
  auto c = parse_text("run.seeds = 7\npower.idle_tx = 70.125\ntraffic.num_ues = 9\n");
  const auto d = describe(c);
  CHECK(std::is_sorted(d.begin(), d.end()));
  std::string text;
  for (const auto& [k, v] : d) text += k + " = " + v + "\n";
  CHECK(describe(parse_text(text)) == d);
  CHECK(d.size() == config_keys().size());
}

TEST_CASE("every documented key is accepted") {
  const auto defaults = describe(HarnessConfig{});
  for (const auto& [key, value] : defaults) {
    CHECK_NOTHROW(parse_text(key + " = " + value + "\n"));
  }
}

TEST_CASE("the shipped default.cfg matches the built-in defaults") {
  CHECK(describe(load_config(NES_DATA_DIR "/default.cfg")) == describe(HarnessConfig{}));
}

TEST_CASE("format_number is shortest round-trip") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(15000000.0) == "1.5e+07");
  CHECK(format_number(20240901.0) == "20240901");
  for (double v : {1.0 / 3.0, 71.3, 2.0 / 54.0, 1e-300}) CHECK(std::stod(format_number(v)) == v);
  CHECK(format_number(119.3) == "119.3");
}
