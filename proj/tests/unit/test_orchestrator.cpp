#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <vector>

#include "nes/error.hpp"
#include "nes/orchestrator.hpp"

using namespace nes;

namespace {

OperatorPolicy delay_policy(double max_delay_ms, double min_tp = 0.1) {
  OperatorPolicy p;
  p.constraints = {{KpiMetric::MinThroughputMbps, min_tp}, {KpiMetric::MaxAddedDelayMs, max_delay_ms}};
  return p;
}

std::set<std::string> ids(std::initializer_list<const char*> list) {
  return {list.begin(), list.end()};
}

FeatureRegistry parse_text(const std::string& text) {
  std::istringstream in(text);
  return FeatureRegistry::parse(in, "test");
}

}  // namespace

TEST_CASE("the embedded registry matches the data file") {
  const auto builtin = FeatureRegistry::builtin();
  const auto loaded = FeatureRegistry::load(NES_DATA_DIR "/feature_registry.txt");
  REQUIRE(builtin.features().size() == loaded.features().size());
  for (std::size_t i = 0; i < builtin.features().size(); ++i) {
    const auto& a = builtin.features()[i];
    const auto& b = loaded.features()[i];
    CHECK(a.id == b.id);
    CHECK(a.category == b.category);
    CHECK(a.depends_on == b.depends_on);
    CHECK(a.conflicts_with == b.conflicts_with);
    CHECK(a.simulatable == b.simulatable);
  }
}

TEST_CASE("registry covers the taxonomy and the actuatable features") {
  const auto r = FeatureRegistry::builtin();
  for (const char* id : {"radio-sleep", "multiband-pa", "dvfs", "cooling"}) {
    CHECK(r.at(id).category == FeatureCategory::Capability);
  }
  for (const char* id : {"lean-nr", "arch-split", "scheduling", "traffic-steering", "dss"}) {
    CHECK(r.at(id).category == FeatureCategory::CreatesIdleWindows);
  }
  for (const char* id : {"asm", "carrier-shutdown", "mmimo-sleep", "power-pooling", "cu-du-pooling"}) {
    CHECK(r.at(id).category == FeatureCategory::UtilizesIdleWindows);
    CHECK_FALSE(r.at(id).simulatable);
  }
  for (const char* id : {"lean160", "tg-10", "tg-30", "tg-60", "asm-micro", "deep-sleep"}) {
    CHECK(r.at(id).simulatable);
  }
  CHECK(r.at("tg-30").tunables.at("tau_ms").min == 30.0);
  CHECK(r.at("deep-sleep").timescale.min_s == doctest::Approx(0.05));
  CHECK(r.find("nope") == nullptr);
  CHECK_THROWS_AS(r.at("nope"), UnknownFeatureError);
}

TEST_CASE("feature-set validation") {
  const auto r = FeatureRegistry::builtin();
  SUBCASE("missing dependency") {
    const auto report = validate_feature_set(ids({"carrier-shutdown"}), r);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0] ==
          Violation{Violation::Kind::MissingDependency, "carrier-shutdown", "traffic-steering"});
    CHECK(validate_feature_set(ids({"carrier-shutdown", "traffic-steering"}), r).valid());
  }
  SUBCASE("capabilities are present unless declared absent") {
    CHECK(validate_feature_set(ids({"asm-micro"}), r).valid());
    const auto report = validate_feature_set(ids({"asm-micro"}), r, ids({"radio-sleep"}));
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].other == "radio-sleep");
  }
  SUBCASE("a conflicting pair is reported once") {
    const auto report = validate_feature_set(ids({"lean160", "tg-10", "tg-60"}), r);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].kind == Violation::Kind::Conflict);
    CHECK(report.violations[0].message() == "tg-10 conflicts with tg-60");
  }
  SUBCASE("gating without lean signaling") {
    CHECK_FALSE(validate_feature_set(ids({"tg-30"}), r).valid());
  }
  SUBCASE("unknown ids are errors, not violations") {
    CHECK_THROWS_AS(validate_feature_set(ids({"warp-drive"}), r), UnknownFeatureError);
  }
  SUBCASE("advisory links are never enforced") {
    CHECK(validate_feature_set(ids({"scheduling"}), r).valid());
  }
}

TEST_CASE("registry parse errors") {
  const std::string ok = "a | capability | PHY | 1ms..2ms | - | - | - | no | -\n";
  CHECK(parse_text(ok).features().size() == 1);
  CHECK_THROWS_AS(parse_text("a | capability | PHY | 1ms..2ms | - | - | no | -\n"), ConfigError);
  CHECK_THROWS_AS(parse_text("a | gadget | PHY | 1ms..2ms | - | - | - | no | -\n"), ConfigError);
  CHECK_THROWS_AS(parse_text("a | capability | PHY | 1..2 | - | - | - | no | -\n"), ConfigError);
  CHECK_THROWS_AS(parse_text("a | capability | PHY | 2ms..1ms | - | - | - | no | -\n"), ConfigError);
  CHECK_THROWS_AS(parse_text("a | capability | PHY | 1ms..2ms | b | - | - | no | -\n"),
                  UnknownFeatureError);
  CHECK_THROWS_AS(parse_text(ok + ok), ConfigError);
  CHECK_THROWS_AS(parse_text("a | capability | PHY | 1ms..2ms | - | - | - | maybe | -\n"), ConfigError);
  CHECK_THROWS_AS(parse_text("a | capability | PHY | 1ms..2ms | - | - | - | no | x\n"), ConfigError);
  CHECK_THROWS_AS(parse_text(ok + "b | capability | PHY | 1ms..2ms | a | a | - | no | -\n"),
                  ConfigError);
  CHECK_THROWS_AS(FeatureRegistry::load("/nonexistent/registry.txt"), IoError);
}

TEST_CASE("prepare picks the longest admissible gate and deep sleep when it pays") {
  const auto r = FeatureRegistry::builtin();
  const LoadEstimate low{0.065, 0.1};

  const auto full = prepare(delay_policy(100.0), low, r, RuCapability::MicroPlusDeep);
  CHECK(full.active_features == ids({"lean160", "tg-60", "deep-sleep"}));
  CHECK(full.tunable("tg-60", "tau_ms") == 60.0);
  CHECK(full.diagnostic.empty());

  CHECK(prepare(delay_policy(45.0), low, r, RuCapability::MicroPlusDeep).active_features ==
        ids({"lean160", "tg-30", "deep-sleep"}));
  CHECK(prepare(delay_policy(5.0), low, r, RuCapability::MicroPlusDeep).active_features ==
        ids({"lean160", "deep-sleep"}));
  CHECK(prepare(delay_policy(100.0), low, r, RuCapability::MicroOnly).active_features ==
        ids({"lean160", "tg-60"}));

  // 159.5 ms * (1 - 0.8) is below the 50 ms qualifying gap.
  const auto busy = prepare(delay_policy(100.0), {0.7, 0.1}, r, RuCapability::MicroPlusDeep);
  CHECK_FALSE(busy.active_features.contains("deep-sleep"));
}

TEST_CASE("prepare attaches guardrails and validates its inputs") {
  const auto r = FeatureRegistry::builtin();
  const auto plan = prepare(delay_policy(100.0, 0.5), {0.1, 0.1}, r, RuCapability::MicroOnly);
  REQUIRE(plan.guardrails.size() == 2);
  CHECK(plan.guardrails[0].metric == KpiMetric::MinThroughputMbps);
  CHECK(plan.guardrails[0].threshold == 0.5);
  CHECK(plan.guardrails[0].action == GuardAction::Rollback);
  CHECK(plan.guardrails[1].action == GuardAction::Relax);

  CHECK_THROWS_AS(prepare(OperatorPolicy{}, {0.1, 0.1}, r, RuCapability::MicroOnly), ConfigError);
  OperatorPolicy free;
  free.unconstrained = true;
  CHECK(prepare(free, {0.1, 0.1}, r, RuCapability::MicroOnly).active_features.contains("tg-60"));
  CHECK_THROWS_AS(prepare(delay_policy(10), {1.5, 0.1}, r, RuCapability::MicroOnly), ConfigError);
}

TEST_CASE("prepare falls back to the minimal plan when the registry cannot support it") {
  const auto r = parse_text("radio-sleep | capability | RF | 1us..1ms | - | - | - | no | -\n");
  const auto plan = prepare(delay_policy(100.0), {0.1, 0.1}, r, RuCapability::MicroPlusDeep);
  CHECK(plan.active_features.empty());
  CHECK(plan.diagnostic.find("no feasible feature set") != std::string::npos);
  CHECK(plan.guardrails.size() == 2);
}

TEST_CASE("every prepared plan is a valid feature set") {
  const auto r = FeatureRegistry::builtin();
  SeededRng rng(31, "test.prepare");
  for (int trial = 0; trial < 300; ++trial) {
    const double delay = rng.uniform() * 200.0;
    const LoadEstimate est{rng.uniform(), rng.uniform() * 0.3};
    const auto cap = rng.bernoulli(0.5) ? RuCapability::MicroOnly : RuCapability::MicroPlusDeep;
    const auto plan = prepare(delay_policy(delay), est, r, cap);
    CHECK(validate_feature_set(plan.active_features, r).valid());
    for (const char* tg : {"tg-10", "tg-30", "tg-60"}) {
      if (auto tau = plan.tunable(tg, "tau_ms")) CHECK(*tau <= delay);
    }
    if (cap == RuCapability::MicroOnly) CHECK_FALSE(plan.active_features.contains("deep-sleep"));
  }
}

TEST_CASE("execute maps plans onto benchmark cells") {
  const auto r = FeatureRegistry::builtin();
  const auto traffic = TrafficProfile::light();
  const auto full = prepare(delay_policy(100.0), {0.1, 0.1}, r, RuCapability::MicroPlusDeep);
  const auto cell = execute(full, r, traffic);
  CHECK(cell.label() == "TG60-mu+DS");
  CHECK(cell.gating.tau_ms == 60.0);
  CHECK(cell.traffic.name == "Light");

  CHECK(execute(prepare(delay_policy(5.0), {0.1, 0.1}, r, RuCapability::MicroOnly), r, traffic)
            .label() == "Lean160-mu");
  CHECK(execute(minimal_plan(full), r, traffic).label() == "Baseline-mu");

  // Same inputs, same cell.
  const auto again = execute(prepare(delay_policy(100.0), {0.1, 0.1}, r, RuCapability::MicroPlusDeep),
                             r, traffic);
  CHECK(again.label() == cell.label());
  CHECK(again.signaling[SignalKind::SSB].period_ms == cell.signaling[SignalKind::SSB].period_ms);
}

TEST_CASE("execute rejects descriptor-only and invalid plans") {
  const auto r = FeatureRegistry::builtin();
  Plan plan;
  plan.active_features = ids({"carrier-shutdown", "traffic-steering"});
  CHECK_THROWS_AS(execute(plan, r, TrafficProfile::low()), NotSimulatableError);
  plan.active_features = ids({"tg-30"});
  CHECK_THROWS_AS(execute(plan, r, TrafficProfile::low()), ConfigError);
  plan.active_features = ids({"no-such-feature"});
  CHECK_THROWS_AS(execute(plan, r, TrafficProfile::low()), UnknownFeatureError);
}

TEST_CASE("monitor decisions") {
  const std::vector<Guardrail> floor = {{KpiMetric::MinThroughputMbps, 0.5, GuardAction::Rollback}};
  KpiSnapshot k;
  k.min_throughput_mbps = 0.26;
  CHECK(monitor(k, floor) == MonitorAction::Rollback);
  k.min_throughput_mbps = 0.52;  // inside the 10 % margin
  CHECK(monitor(k, floor) == MonitorAction::Relax);
  k.min_throughput_mbps = 3.0;
  CHECK(monitor(k, floor) == MonitorAction::Keep);
  k.min_throughput_mbps.reset();
  CHECK(monitor(k, floor) == MonitorAction::Keep);

  const std::vector<Guardrail> load = {{KpiMetric::NeighborLoad, 0.7, GuardAction::Deactivate}};
  k.neighbor_load = 0.75;
  CHECK(monitor(k, load) == MonitorAction::Relax);
  k.neighbor_load = 0.2;
  CHECK(monitor(k, load) == MonitorAction::Keep);

  std::vector<Guardrail> both = floor;
  both.push_back(load[0]);
  k.min_throughput_mbps = 0.1;
  k.neighbor_load = 0.75;
  CHECK(monitor(k, both) == MonitorAction::Rollback);
}

TEST_CASE("monitor is monotone in the observed throughput") {
  const std::vector<Guardrail> floor = {{KpiMetric::MinThroughputMbps, 2.0, GuardAction::Rollback}};
  MonitorAction previous = MonitorAction::Rollback;
  for (double tp = 0.0; tp < 5.0; tp += 0.01) {
    KpiSnapshot k;
    k.min_throughput_mbps = tp;
    const auto a = monitor(k, floor);
    CHECK(a <= previous);
    previous = a;
  }
  CHECK(previous == MonitorAction::Keep);
}

TEST_CASE("relax walks down the gate ladder, then drops deep sleep") {
  const auto r = FeatureRegistry::builtin();
  Plan p = prepare(delay_policy(100.0), {0.1, 0.1}, r, RuCapability::MicroPlusDeep);
  const std::vector<std::set<std::string>> ladder = {
      ids({"lean160", "tg-30", "deep-sleep"}), ids({"lean160", "tg-10", "deep-sleep"}),
      ids({"lean160", "deep-sleep"}), ids({"lean160"}), ids({"lean160"})};
  for (const auto& expected : ladder) {
    p = relax(p);
    CHECK(p.active_features == expected);
    CHECK(validate_feature_set(p.active_features, r).valid());
  }
  CHECK_FALSE(p.tunable("tg-10", "tau_ms").has_value());
}

TEST_CASE("minimal plan keeps the guardrails only") {
  Plan p;
  p.active_features = ids({"lean160"});
  p.guardrails = {{KpiMetric::MaxAddedDelayMs, 10.0, GuardAction::Relax}};
  const auto m = minimal_plan(p, "why");
  CHECK(m.active_features.empty());
  CHECK(m.configuration.empty());
  CHECK(m.guardrails.size() == 1);
  CHECK(m.diagnostic == "why");
}

TEST_CASE("load estimation") {
  const std::vector<double> flat(8, 0.3);
  const auto e = estimate_load(flat, 5, 0.1);
  CHECK(e.predicted_utilization == doctest::Approx(0.3));
  CHECK(e.confidence_margin == 0.1);
  const std::vector<double> two = {0.0, 0.1};
  CHECK(estimate_load(two, 2, 0.1).predicted_utilization == doctest::Approx(0.05));
  const std::vector<double> ramp = {0.9, 0.9, 0.1, 0.2, 0.3};
  CHECK(estimate_load(ramp, 3, 0.1).predicted_utilization == doctest::Approx(0.2));
  CHECK_THROWS_AS(estimate_load(std::vector<double>{}, 5, 0.1), EmptyInputError);
  CHECK_THROWS_AS(estimate_load(two, 0, 0.1), ConfigError);
}

TEST_CASE("policy bounds and names") {
  OperatorPolicy p;
  p.constraints = {{KpiMetric::MaxAddedDelayMs, 60.0}, {KpiMetric::MaxAddedDelayMs, 20.0},
                   {KpiMetric::MinThroughputMbps, 1.0}, {KpiMetric::MinThroughputMbps, 2.0}};
  CHECK(p.bound(KpiMetric::MaxAddedDelayMs) == 20.0);
  CHECK(p.bound(KpiMetric::MinThroughputMbps) == 2.0);
  CHECK_FALSE(p.bound(KpiMetric::NeighborLoad).has_value());
  for (auto m : {KpiMetric::MinThroughputMbps, KpiMetric::MaxAddedDelayMs, KpiMetric::NeighborLoad}) {
    CHECK(kpi_metric_from_string(to_string(m)) == m);
  }
  p.objective = "maximize-fun";
  CHECK_THROWS_AS(p.validate(), ConfigError);
}
