#include "nes/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <type_traits>

#include "nes/error.hpp"

namespace nes {

namespace {

using Setter = std::function<void(HarnessConfig&, std::string_view)>;
using Getter = std::function<std::string(const HarnessConfig&)>;

struct Binding {
  std::string key;
  std::string help;
  Setter set;
  Getter get;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(std::string_view v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError("expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

template <typename Int>
Int to_integer(std::string_view v) {
  Int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError("expected an integer, got '" + std::string(v) + "'");
  }
  return out;
}

bool to_bool(std::string_view v) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError("expected a boolean, got '" + std::string(v) + "'");
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

template <typename Field>
Binding number(std::string key, std::string help, Field field) {
  return {std::move(key), std::move(help),
          [field](HarnessConfig& c, std::string_view v) { field(c) = to_double(v); },
          [field](const HarnessConfig& c) { return format_number(field(c)); }};
}

template <typename Field>
Binding integer(std::string key, std::string help, Field field) {
  return {std::move(key), std::move(help),
          [field](HarnessConfig& c, std::string_view v) {
            field(c) = to_integer<std::remove_cvref_t<decltype(field(c))>>(v);
          },
          [field](const HarnessConfig& c) { return std::to_string(field(c)); }};
}

template <typename Field>
Binding boolean(std::string key, std::string help, Field field) {
  return {std::move(key), std::move(help),
          [field](HarnessConfig& c, std::string_view v) { field(c) = to_bool(v); },
          [field](const HarnessConfig& c) { return from_bool(field(c)); }};
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

Binding policy_bound(KpiMetric metric, std::string key, std::string help) {
  return {std::move(key), std::move(help),
          [metric](HarnessConfig& c, std::string_view v) {
            auto& cs = c.policy.constraints;
            cs.erase(std::remove_if(cs.begin(), cs.end(),
                                    [&](const KpiConstraint& k) { return k.metric == metric; }),
                     cs.end());
            if (v != "none") cs.push_back({metric, to_double(v)});
          },
          [metric](const HarnessConfig& c) {
            const auto b = c.policy.bound(metric);
            return b ? format_number(*b) : std::string("none");
          }};
}

std::vector<Binding> make_bindings() {
  std::vector<Binding> b;
  b.push_back(number("grid.subcarrier_spacing_khz", "subcarrier spacing, kHz (15 * 2^n)",
                     [](auto& c) -> auto& { return c.sim.subcarrier_spacing_khz; }));

  b.push_back(integer("run.seeds", "seeds per benchmark cell",
                      [](auto& c) -> auto& { return c.seeds; }));
  b.push_back(number("run.horizon_s", "simulated seconds per seed",
                     [](auto& c) -> auto& { return c.horizon_s; }));
  b.push_back({"run.first_seed", "seed of the first run; later runs count up",
               [](HarnessConfig& c, std::string_view v) {
                 c.first_seed = to_integer<std::uint64_t>(v);
               },
               [](const HarnessConfig& c) { return std::to_string(c.first_seed); }});

  for (PowerState s : kAllPowerStates) {
    b.push_back(number("power." + std::string(to_string(s)),
                       "relative power of " + std::string(to_string(s)),
                       [s](auto& c) -> auto& {
                         return c.sim.power.relative_power[index_of(s)];
                       }));
  }
  b.push_back(number("power.transition_energy", "energy of one deep-sleep ramp",
                     [](auto& c) -> auto& {
                       return c.sim.power.deep_sleep_transition_energy;
                     }));
  b.push_back(integer("power.transitions_per_cycle", "ramps per deep-sleep cycle",
                      [](auto& c) -> auto& {
                        return c.sim.power.deep_sleep_transition_count_per_cycle;
                      }));
  b.push_back({"power.qualifying_gap_ms", "shortest idle gap billed as deep sleep, ms",
               [](HarnessConfig& c, std::string_view v) {
                 c.sim.power.deep_sleep_qualifying_gap = to_double(v) * 1e-3;
               },
               [](const HarnessConfig& c) {
                 return format_number(c.sim.power.deep_sleep_qualifying_gap * 1e3);
               }});

  b.push_back(integer("link.num_prbs", "PRBs in the carrier",
                      [](auto& c) -> auto& { return c.sim.link.num_prbs; }));
  b.push_back(number("link.bits_per_prb_per_slot", "bits one PRB carries in one slot",
                     [](auto& c) -> auto& {
                       return c.sim.link.bits_per_prb_per_slot;
                     }));

  b.push_back({"traffic.payload", "payload law: fixed or mix",
               [](HarnessConfig& c, std::string_view v) {
                 if (v == "fixed") {
                   c.sim.traffic.payload.kind = PayloadDistribution::Kind::Fixed;
                 } else if (v == "mix") {
                   c.sim.traffic.payload.kind = PayloadDistribution::Kind::SessionMix;
                 } else {
                   throw ConfigError("payload must be fixed or mix");
                 }
               },
               [](const HarnessConfig& c) {
                 return std::string(c.sim.traffic.payload.kind == PayloadDistribution::Kind::Fixed
                                        ? "fixed"
                                        : "mix");
               }});
  b.push_back(number("traffic.payload_bits", "fixed payload size, bits",
                     [](auto& c) -> auto& {
                       return c.sim.traffic.payload.fixed_bits;
                     }));
  b.push_back(number("traffic.mix_scale", "scale of the session-size mix",
                     [](auto& c) -> auto& { return c.sim.traffic.payload.mix_scale; }));
  b.push_back({"traffic.source_rate_mbps", "rate at which a session fills the buffer, Mb/s",
               [](HarnessConfig& c, std::string_view v) {
                 c.sim.traffic.source_rate_bps = to_double(v) * 1e6;
               },
               [](const HarnessConfig& c) {
                 return format_number(c.sim.traffic.source_rate_bps * 1e-6);
               }});
  b.push_back(number("traffic.chunk_bits", "granularity of buffer filling, bits",
                     [](auto& c) -> auto& { return c.sim.traffic.chunk_bits; }));
  b.push_back(number("traffic.priority_fraction", "share of high-priority sessions",
                     [](auto& c) -> auto& {
                       return c.sim.traffic.priority_fraction;
                     }));
  b.push_back(integer("traffic.num_ues", "UEs sessions are spread over",
                      [](auto& c) -> auto& { return c.sim.traffic.num_ues; }));
  b.push_back(number("traffic.warm_up_s", "pre-roll before t = 0; negative picks automatically",
                     [](auto& c) -> auto& { return c.sim.warm_up_s; }));
  b.push_back(number("traffic.low_target", "Low profile PRB utilization target",
                     [](auto& c) -> auto& {
                       return c.low.target_mean_prb_utilization;
                     }));
  b.push_back(number("traffic.light_target", "Light profile PRB utilization target",
                     [](auto& c) -> auto& {
                       return c.light.target_mean_prb_utilization;
                     }));
  b.push_back(number("traffic.medium_target", "Medium profile PRB utilization target",
                     [](auto& c) -> auto& {
                       return c.medium.target_mean_prb_utilization;
                     }));

  for (SignalKind k : kAllSignalKinds) {
    const std::string prefix = "signaling." + lower(to_string(k)) + ".";
    const std::string name(to_string(k));
    b.push_back(number(prefix + "period_ms", name + " period in the Baseline, ms",
                       [k](auto& c) -> auto& {
                         return c.sim.baseline_signaling[k].period_ms;
                       }));
    b.push_back(number(prefix + "phase_ms", name + " offset within its period, ms",
                       [k](auto& c) -> auto& {
                         return c.sim.baseline_signaling[k].phase_ms;
                       }));
    b.push_back(integer(prefix + "symbols", name + " symbols per occasion",
                        [k](auto& c) -> auto& {
                          return c.sim.baseline_signaling[k].footprint.symbols;
                        }));
    b.push_back(integer(prefix + "prbs", name + " PRBs per occasion",
                        [k](auto& c) -> auto& {
                          return c.sim.baseline_signaling[k].footprint.prbs;
                        }));
  }
  b.push_back(number("signaling.lean_period_ms", "period of every signal under lean operation",
                     [](auto& c) -> auto& { return c.sim.lean_period_ms; }));

  b.push_back(boolean("gating.bypass_on_high_priority", "high-priority data opens the gate",
                      [](auto& c) -> auto& {
                        return c.sim.gate_bypass_on_high_priority;
                      }));

  b.push_back(boolean("sleep.enabled", "micro sleep allowed in idle symbols",
                      [](auto& c) -> auto& { return c.sim.sleep.sleep_enabled; }));
  b.push_back(integer("sleep.min_idle_symbols_for_micro", "shortest idle run that micro-sleeps",
                      [](auto& c) -> auto& {
                        return c.sim.sleep.min_idle_symbols_for_micro;
                      }));
  b.push_back(integer("sleep.rx_guard_symbols", "idle symbols kept in IdleRx around UL reception",
                      [](auto& c) -> auto& { return c.sim.sleep.rx_guard_symbols; }));

  b.push_back({"calibration.seed", "seed of the calibration run",
               [](HarnessConfig& c, std::string_view v) {
                 c.calibration.seed = to_integer<std::uint64_t>(v);
               },
               [](const HarnessConfig& c) { return std::to_string(c.calibration.seed); }});
  b.push_back(integer("calibration.replicas", "calibration runs averaged per measurement",
                      [](auto& c) -> auto& { return c.calibration.replicas; }));
  b.push_back(number("calibration.horizon_s", "length of the calibration run, s",
                     [](auto& c) -> auto& { return c.calibration.horizon_s; }));
  b.push_back(number("calibration.tolerance", "accepted utilization error, fraction",
                     [](auto& c) -> auto& { return c.calibration.tolerance; }));
  b.push_back(integer("calibration.max_iterations", "rate refinements before giving up",
                      [](auto& c) -> auto& { return c.calibration.max_iterations; }));

  b.push_back({"orchestrator.gate_options_ms", "comma-separated gate timers to choose from, ms",
               [](HarnessConfig& c, std::string_view v) {
                 std::vector<double> options;
                 std::size_t pos = 0;
                 while (pos <= v.size()) {
                   const auto comma = std::min(v.find(',', pos), v.size());
                   options.push_back(to_double(trim(v.substr(pos, comma - pos))));
                   pos = comma + 1;
                 }
                 c.orchestrator.gate_options_ms = std::move(options);
               },
               [](const HarnessConfig& c) {
                 std::string out;
                 for (double o : c.orchestrator.gate_options_ms) {
                   if (!out.empty()) out += ",";
                   out += format_number(o);
                 }
                 return out;
               }});
  b.push_back(integer("orchestrator.load_window", "samples in the load moving average",
                      [](auto& c) -> auto& { return c.orchestrator.load_window; }));
  b.push_back(number("orchestrator.confidence_margin", "added to predicted load when sizing gaps",
                     [](auto& c) -> auto& {
                       return c.orchestrator.confidence_margin;
                     }));
  b.push_back(number("orchestrator.guard_margin", "relative distance to a threshold that relaxes",
                     [](auto& c) -> auto& { return c.orchestrator.guard_margin; }));
  b.push_back(integer("orchestrator.max_iterations", "closed-loop rounds",
                      [](auto& c) -> auto& { return c.orchestrator.max_iterations; }));

  b.push_back(policy_bound(KpiMetric::MinThroughputMbps, "policy.min_throughput_mbps",
                           "per-session throughput floor, Mb/s, or none"));
  b.push_back(policy_bound(KpiMetric::MaxAddedDelayMs, "policy.max_added_delay_ms",
                           "worst-case gating delay bound, ms, or none"));
  b.push_back(policy_bound(KpiMetric::NeighborLoad, "policy.max_neighbor_load",
                           "neighbor load ceiling, fraction, or none"));
  b.push_back(boolean("policy.unconstrained", "allow a policy without KPI constraints",
                      [](auto& c) -> auto& { return c.policy.unconstrained; }));

  std::sort(b.begin(), b.end(), [](const Binding& x, const Binding& y) { return x.key < y.key; });
  return b;
}

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> kBindings = make_bindings();
  return kBindings;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

OperatorPolicy HarnessConfig::default_policy() {
  OperatorPolicy p;
  p.constraints = {{KpiMetric::MinThroughputMbps, 0.1}, {KpiMetric::MaxAddedDelayMs, 100.0}};
  return p;
}

TrafficProfile HarnessConfig::traffic(const std::string& name) const {
  if (name == "Low") return low;
  if (name == "Light") return light;
  if (name == "Medium") return medium;
  throw ConfigError("unknown traffic profile '" + name + "' (expected Low, Light or Medium)");
}

void HarnessConfig::validate() const {
  sim.validate();
  low.validate();
  light.validate();
  medium.validate();
  policy.validate();
  if (seeds < 1) throw ConfigError("run.seeds must be at least 1");
  TimeGrid grid(sim.subcarrier_spacing_khz, 0);
  grid.slots_in(horizon_s);
  if (!(horizon_s > 0.0)) throw ConfigError("run.horizon_s must be positive");
  if (!(calibration.horizon_s > 0.0)) throw ConfigError("calibration.horizon_s must be positive");
  if (!(calibration.tolerance > 0.0)) throw ConfigError("calibration.tolerance must be positive");
  if (calibration.replicas < 1) throw ConfigError("calibration.replicas must be >= 1");
  if (calibration.max_iterations < 0) throw ConfigError("calibration.max_iterations is negative");
  if (orchestrator.gate_options_ms.empty()) throw ConfigError("no gate timer options");
  for (double t : orchestrator.gate_options_ms) {
    if (!(t > 0.0)) throw ConfigError("gate timer options must be positive");
  }
  if (orchestrator.load_window < 1) throw ConfigError("orchestrator.load_window must be >= 1");
  if (orchestrator.max_iterations < 1) {
    throw ConfigError("orchestrator.max_iterations must be >= 1");
  }
}

HarnessConfig parse_config(std::istream& in, const std::string& source) {
  HarnessConfig config;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(std::string_view(line).substr(0, line.find('#')));
    if (body.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = std::string(trim(body.substr(1, body.size() - 2)));
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    std::string key(trim(body.substr(0, eq)));
    if (!section.empty()) key = section + "." + key;
    const auto value = trim(body.substr(eq + 1));
    const auto& all = bindings();
    const auto it = std::lower_bound(all.begin(), all.end(), key,
                                     [](const Binding& b, const std::string& k) {
                                       return b.key < k;
                                     });
    if (it == all.end() || it->key != key) throw ConfigError(where + ": unknown key '" + key + "'");
    try {
      it->set(config, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + key + ": " + e.what());
    }
  }
  config.orchestrator.lean_period_ms = config.sim.lean_period_ms;
  config.validate();
  return config;
}

HarnessConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_config(in, path.string());
}

std::vector<std::pair<std::string, std::string>> describe(const HarnessConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& b : bindings()) out.emplace_back(b.key, b.get(config));
  return out;
}

std::vector<std::pair<std::string, std::string>> config_keys() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& b : bindings()) out.emplace_back(b.key, b.help);
  return out;
}

}  // namespace nes
