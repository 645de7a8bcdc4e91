#include "nes/orchestrator.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "nes/error.hpp"
#include "nes/signaling.hpp"

namespace nes {

namespace {

constexpr std::string_view kBuiltinRegistry =
#include "nes/builtin_registry.inc"
    ;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next == std::string_view::npos ? next : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

double parse_number(std::string_view text, const std::string& where) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(where + ": bad number '" + std::string(text) + "'");
  }
  return v;
}

double parse_duration(std::string_view text, const std::string& where) {
  struct Unit {
    std::string_view suffix;
    double scale;
  };
  // Longest suffixes first so "ms" is not read as "s".
  static constexpr Unit kUnits[] = {{"min", 60.0}, {"us", 1e-6}, {"ms", 1e-3}, {"s", 1.0}};
  for (const auto& u : kUnits) {
    if (text.size() > u.suffix.size() && text.ends_with(u.suffix)) {
      return parse_number(text.substr(0, text.size() - u.suffix.size()), where) * u.scale;
    }
  }
  throw ConfigError(where + ": duration '" + std::string(text) + "' needs a unit (us, ms, s, min)");
}

std::pair<double, double> parse_range(std::string_view text, const std::string& where,
                                      bool durations) {
  const auto dots = text.find("..");
  if (dots == std::string_view::npos) {
    throw ConfigError(where + ": expected a range 'min..max', got '" + std::string(text) + "'");
  }
  auto read = [&](std::string_view part) {
    return durations ? parse_duration(trim(part), where) : parse_number(trim(part), where);
  };
  const double lo = read(text.substr(0, dots));
  const double hi = read(text.substr(dots + 2));
  if (lo > hi) throw ConfigError(where + ": range '" + std::string(text) + "' is reversed");
  return {lo, hi};
}

std::vector<std::string> parse_ids(std::string_view text) {
  std::vector<std::string> ids;
  if (text == "-" || text.empty()) return ids;
  for (auto id : split(text, ',')) {
    if (!id.empty()) ids.emplace_back(id);
  }
  return ids;
}

std::string format_ms(double ms) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, ms);
  return std::string(buf, ptr);
}

std::string gate_feature(double tau_ms) { return "tg-" + format_ms(tau_ms); }

std::optional<double> gate_of(const Plan& plan) {
  for (const auto& id : plan.active_features) {
    if (id.starts_with("tg-")) {
      if (auto tau = plan.tunable(id, "tau_ms")) return tau;
      return parse_number(std::string_view(id).substr(3), "plan feature " + id);
    }
  }
  return std::nullopt;
}

void drop_gating(Plan& plan) {
  for (auto it = plan.active_features.begin(); it != plan.active_features.end();) {
    if (it->starts_with("tg-")) {
      plan.configuration.erase({*it, "tau_ms"});
      it = plan.active_features.erase(it);
    } else {
      ++it;
    }
  }
}

}  // namespace

std::string_view to_string(FeatureCategory c) {
  switch (c) {
    case FeatureCategory::Capability: return "capability";
    case FeatureCategory::CreatesIdleWindows: return "creates-idle-windows";
    case FeatureCategory::UtilizesIdleWindows: return "utilizes-idle-windows";
  }
  return "?";
}

std::optional<FeatureCategory> feature_category_from_string(std::string_view s) {
  for (auto c : {FeatureCategory::Capability, FeatureCategory::CreatesIdleWindows,
                 FeatureCategory::UtilizesIdleWindows}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

FeatureRegistry::FeatureRegistry(std::vector<FeatureDescriptor> features)
    : features_(std::move(features)) {
  std::set<std::string> ids;
  for (const auto& f : features_) {
    if (f.id.empty()) throw ConfigError("feature with an empty id");
    if (!ids.insert(f.id).second) throw ConfigError("duplicate feature id '" + f.id + "'");
    if (f.timescale.min_s > f.timescale.max_s) {
      throw ConfigError("feature '" + f.id + "' has a reversed timescale");
    }
  }
  for (const auto& f : features_) {
    for (const auto* list : {&f.depends_on, &f.conflicts_with, &f.advises}) {
      for (const auto& ref : *list) {
        if (!ids.contains(ref)) {
          throw UnknownFeatureError("feature '" + f.id + "' references unknown id '" + ref + "'");
        }
        if (ref == f.id) throw ConfigError("feature '" + f.id + "' references itself");
      }
    }
    for (const auto& dep : f.depends_on) {
      if (std::find(f.conflicts_with.begin(), f.conflicts_with.end(), dep) !=
          f.conflicts_with.end()) {
        throw ConfigError("feature '" + f.id + "' both depends on and conflicts with '" + dep +
                          "'");
      }
    }
  }
}

FeatureRegistry FeatureRegistry::builtin() {
  std::istringstream in{std::string(kBuiltinRegistry)};
  return parse(in, "<builtin registry>");
}

FeatureRegistry FeatureRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feature registry " + path.string());
  return parse(in, path.string());
}

FeatureRegistry FeatureRegistry::parse(std::istream& in, const std::string& source) {
  std::vector<FeatureDescriptor> features;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(std::string_view(line).substr(0, line.find('#')));
    if (body.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto cols = split(body, '|');
    if (cols.size() != 9) {
      throw ConfigError(where + ": expected 9 '|'-separated columns, got " +
                        std::to_string(cols.size()));
    }
    FeatureDescriptor f;
    f.id = std::string(cols[0]);
    const auto category = feature_category_from_string(cols[1]);
    if (!category) throw ConfigError(where + ": unknown category '" + std::string(cols[1]) + "'");
    f.category = *category;
    f.layer = std::string(cols[2]);
    const auto [lo, hi] = parse_range(cols[3], where, true);
    f.timescale = {lo, hi};
    f.depends_on = parse_ids(cols[4]);
    f.conflicts_with = parse_ids(cols[5]);
    f.advises = parse_ids(cols[6]);
    if (cols[7] != "yes" && cols[7] != "no") {
      throw ConfigError(where + ": simulatable must be yes or no");
    }
    f.simulatable = cols[7] == "yes";
    if (cols[8] != "-") {
      for (auto item : split(cols[8], ',')) {
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) {
          throw ConfigError(where + ": tunable '" + std::string(item) + "' lacks '='");
        }
        const auto [tmin, tmax] = parse_range(trim(item.substr(eq + 1)), where, false);
        f.tunables[std::string(trim(item.substr(0, eq)))] = {tmin, tmax};
      }
    }
    features.push_back(std::move(f));
  }
  return FeatureRegistry(std::move(features));
}

const FeatureDescriptor* FeatureRegistry::find(std::string_view id) const {
  for (const auto& f : features_) {
    if (f.id == id) return &f;
  }
  return nullptr;
}

const FeatureDescriptor& FeatureRegistry::at(std::string_view id) const {
  if (const auto* f = find(id)) return *f;
  throw UnknownFeatureError("unknown feature '" + std::string(id) + "'");
}

std::string Violation::message() const {
  if (kind == Kind::MissingDependency) {
    return feature + " requires " + other + ", which is not active";
  }
  return feature + " conflicts with " + other;
}

ValidationReport validate_feature_set(const std::set<std::string>& features,
                                      const FeatureRegistry& registry,
                                      const std::set<std::string>& absent_capabilities) {
  for (const auto& id : features) registry.at(id);
  for (const auto& id : absent_capabilities) registry.at(id);

  ValidationReport report;
  for (const auto& id : features) {
    const auto& f = registry.at(id);
    for (const auto& dep : f.depends_on) {
      const bool hardware = registry.at(dep).category == FeatureCategory::Capability;
      const bool present =
          features.contains(dep) || (hardware && !absent_capabilities.contains(dep));
      if (!present) report.violations.push_back({Violation::Kind::MissingDependency, id, dep});
    }
  }
  // Each unordered pair once, whichever side declares it.
  for (auto a = features.begin(); a != features.end(); ++a) {
    for (auto b = std::next(a); b != features.end(); ++b) {
      const auto& fa = registry.at(*a);
      const auto& fb = registry.at(*b);
      const bool clash =
          std::find(fa.conflicts_with.begin(), fa.conflicts_with.end(), *b) !=
              fa.conflicts_with.end() ||
          std::find(fb.conflicts_with.begin(), fb.conflicts_with.end(), *a) !=
              fb.conflicts_with.end();
      if (clash) report.violations.push_back({Violation::Kind::Conflict, *a, *b});
    }
  }
  return report;
}

std::string_view to_string(KpiMetric m) {
  switch (m) {
    case KpiMetric::MinThroughputMbps: return "min_throughput_mbps";
    case KpiMetric::MaxAddedDelayMs: return "max_added_delay_ms";
    case KpiMetric::NeighborLoad: return "neighbor_load";
  }
  return "?";
}

std::optional<KpiMetric> kpi_metric_from_string(std::string_view s) {
  for (auto m : {KpiMetric::MinThroughputMbps, KpiMetric::MaxAddedDelayMs,
                 KpiMetric::NeighborLoad}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

bool lower_bounded(KpiMetric m) { return m == KpiMetric::MinThroughputMbps; }

std::optional<double> OperatorPolicy::bound(KpiMetric m) const {
  std::optional<double> out;
  for (const auto& c : constraints) {
    if (c.metric != m) continue;
    // Several bounds on one metric: the tightest wins.
    if (!out) {
      out = c.bound;
    } else {
      out = lower_bounded(m) ? std::max(*out, c.bound) : std::min(*out, c.bound);
    }
  }
  return out;
}

void OperatorPolicy::validate() const {
  if (objective != "minimize-energy") {
    throw ConfigError("unsupported objective '" + objective + "'");
  }
  if (constraints.empty() && !unconstrained) {
    throw ConfigError("policy needs a KPI constraint or an explicit unconstrained flag");
  }
  for (const auto& c : constraints) {
    if (c.bound < 0.0) {
      throw ConfigError("bound on " + std::string(to_string(c.metric)) + " must be non-negative");
    }
  }
}

std::string_view to_string(GuardAction a) {
  switch (a) {
    case GuardAction::Relax: return "relax";
    case GuardAction::Deactivate: return "deactivate";
    case GuardAction::Rollback: return "rollback";
  }
  return "?";
}

std::optional<double> Plan::tunable(const std::string& feature, const std::string& name) const {
  const auto it = configuration.find({feature, name});
  if (it == configuration.end()) return std::nullopt;
  return it->second;
}

void LoadEstimate::validate() const {
  if (predicted_utilization < 0.0 || predicted_utilization > 1.0) {
    throw ConfigError("predicted utilization must lie in [0, 1]");
  }
  if (confidence_margin < 0.0 || confidence_margin > 1.0) {
    throw ConfigError("confidence margin must lie in [0, 1]");
  }
}

Plan prepare(const OperatorPolicy& policy, const LoadEstimate& estimate,
             const FeatureRegistry& registry, RuCapability capability,
             const SimulationSettings& sim, const OrchestratorSettings& settings) {
  policy.validate();
  estimate.validate();

  Plan plan;
  for (const auto& c : policy.constraints) {
    const GuardAction action =
        c.metric == KpiMetric::MinThroughputMbps ? GuardAction::Rollback : GuardAction::Relax;
    plan.guardrails.push_back({c.metric, c.bound, action});
  }
  if (!registry.find("lean160")) {
    return minimal_plan(plan, "no feasible feature set: registry lacks lean160");
  }
  plan.active_features.insert("lean160");
  plan.configuration[{"lean160", "period_ms"}] = settings.lean_period_ms;

  // Released data waits at most one timer period.
  const double delay_bound = policy.bound(KpiMetric::MaxAddedDelayMs).value_or(1e300);
  std::vector<double> options = settings.gate_options_ms;
  std::sort(options.begin(), options.end(), std::greater<>());
  for (double tau : options) {
    if (tau <= delay_bound && registry.find(gate_feature(tau))) {
      plan.active_features.insert(gate_feature(tau));
      plan.configuration[{gate_feature(tau), "tau_ms"}] = tau;
      break;
    }
  }

  if (capability == RuCapability::MicroPlusDeep && registry.find("deep-sleep")) {
    SimulationSettings lean = sim;
    lean.lean_period_ms = settings.lean_period_ms;
    const auto signaling =
        BenchmarkConfig::preset("Lean160", capability, TrafficProfile::low(), lean).signaling;
    const TimeGrid grid =
        TimeGrid::with_horizon(sim.subcarrier_spacing_khz, 10.0 * settings.lean_period_ms * 1e-3);
    const double busy =
        std::min(1.0, estimate.predicted_utilization + estimate.confidence_margin);
    const double predicted_gap = max_idle_gap(signaling, grid) * (1.0 - busy);
    if (predicted_gap > sim.power.deep_sleep_qualifying_gap) {
      plan.active_features.insert("deep-sleep");
      plan.configuration[{"deep-sleep", "qualifying_gap_ms"}] =
          sim.power.deep_sleep_qualifying_gap * 1e3;
    }
  }

  const auto report = validate_feature_set(plan.active_features, registry);
  if (!report.valid()) {
    return minimal_plan(plan, "no feasible feature set: " + report.violations.front().message());
  }
  return plan;
}

BenchmarkConfig execute(const Plan& plan, const FeatureRegistry& registry,
                        const TrafficProfile& traffic, const SimulationSettings& sim) {
  for (const auto& id : plan.active_features) {
    if (!registry.at(id).simulatable) {
      throw NotSimulatableError("feature '" + id +
                                "' is a descriptor only and is not simulatable");
    }
  }
  const auto report = validate_feature_set(plan.active_features, registry);
  if (!report.valid()) throw ConfigError("invalid plan: " + report.violations.front().message());

  SimulationSettings settings = sim;
  if (auto period = plan.tunable("lean160", "period_ms")) settings.lean_period_ms = *period;
  const RuCapability capability = plan.active_features.contains("deep-sleep")
                                      ? RuCapability::MicroPlusDeep
                                      : RuCapability::MicroOnly;
  std::string id = "Baseline";
  if (auto tau = gate_of(plan)) {
    id = "TG" + format_ms(*tau);
  } else if (plan.active_features.contains("lean160")) {
    id = "Lean160";
  }
  return BenchmarkConfig::preset(id, capability, traffic, settings);
}

std::string_view to_string(MonitorAction a) {
  switch (a) {
    case MonitorAction::Keep: return "keep";
    case MonitorAction::Relax: return "relax";
    case MonitorAction::Rollback: return "rollback";
  }
  return "?";
}

KpiSnapshot KpiSnapshot::from(const RunResult& result) {
  KpiSnapshot s;
  if (!result.throughputs.empty()) {
    s.min_throughput_mbps =
        *std::min_element(result.throughputs.begin(), result.throughputs.end());
  }
  return s;
}

std::optional<double> KpiSnapshot::value(KpiMetric m) const {
  switch (m) {
    case KpiMetric::MinThroughputMbps: return min_throughput_mbps;
    case KpiMetric::MaxAddedDelayMs: return added_delay_ms;
    case KpiMetric::NeighborLoad: return neighbor_load;
  }
  return std::nullopt;
}

MonitorAction monitor(const KpiSnapshot& kpis, std::span<const Guardrail> guardrails,
                      double guard_margin) {
  MonitorAction worst = MonitorAction::Keep;
  for (const auto& g : guardrails) {
    const auto v = kpis.value(g.metric);
    if (!v) continue;
    const bool lower = lower_bounded(g.metric);
    const bool breached = lower ? *v < g.threshold : *v > g.threshold;
    const bool close = lower ? *v < g.threshold * (1.0 + guard_margin)
                             : *v > g.threshold * (1.0 - guard_margin);
    MonitorAction a = MonitorAction::Keep;
    if (breached) {
      a = g.action == GuardAction::Rollback ? MonitorAction::Rollback : MonitorAction::Relax;
    } else if (close) {
      a = MonitorAction::Relax;
    }
    worst = std::max(worst, a);
  }
  return worst;
}

Plan relax(const Plan& plan, const OrchestratorSettings& settings) {
  Plan out = plan;
  if (auto tau = gate_of(plan)) {
    drop_gating(out);
    std::optional<double> shorter;
    for (double option : settings.gate_options_ms) {
      if (option < *tau && (!shorter || option > *shorter)) shorter = option;
    }
    if (shorter) {
      out.active_features.insert(gate_feature(*shorter));
      out.configuration[{gate_feature(*shorter), "tau_ms"}] = *shorter;
    }
    return out;
  }
  if (out.active_features.erase("deep-sleep") > 0) {
    out.configuration.erase({"deep-sleep", "qualifying_gap_ms"});
  }
  return out;
}

Plan minimal_plan(const Plan& plan, const std::string& diagnostic) {
  Plan out;
  out.guardrails = plan.guardrails;
  out.diagnostic = diagnostic;
  return out;
}

LoadEstimate estimate_load(std::span<const double> history, int window, double margin) {
  if (history.empty()) throw EmptyInputError("load history is empty");
  if (window < 1) throw ConfigError("load window must be at least one sample");
  const std::size_t n = std::min(history.size(), static_cast<std::size_t>(window));
  double sum = 0.0;
  for (std::size_t i = history.size() - n; i < history.size(); ++i) sum += history[i];
  LoadEstimate e;
  e.predicted_utilization = std::clamp(sum / static_cast<double>(n), 0.0, 1.0);
  e.confidence_margin = margin;
  e.validate();
  return e;
}

}  // namespace nes
