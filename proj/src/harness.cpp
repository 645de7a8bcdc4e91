#include "nes/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "nes/error.hpp"
#include "nes/kpi_stats.hpp"

namespace nes {

namespace {

using nlohmann::ordered_json;

const char* const kCalibrationFile = "calibration.json";

std::string csv_number(double v) { return format_number(v); }

std::string join_plan(const Plan& plan) {
  std::string out;
  for (const auto& id : plan.active_features) {
    if (!out.empty()) out += ",";
    out += id;
  }
  return out.empty() ? "-" : out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

const CellResult* find_baseline(const MatrixResult& result, const std::string& traffic) {
  const CellResult* fallback = nullptr;
  for (const auto& cell : result.cells) {
    if (cell.config.id != "Baseline" || cell.config.traffic.name != traffic) continue;
    if (cell.config.capability == RuCapability::MicroOnly) return &cell;
    fallback = &cell;
  }
  return fallback;
}

void summary_row(std::ostream& out, const CellResult& cell, const std::string& metric,
                 const std::vector<double>& values) {
  if (values.empty()) return;
  const SummaryStats s = summarize(values);
  out << cell.config.label() << ',' << cell.config.traffic.name << ',' << metric << ',' << s.n
      << ',' << csv_number(s.mean) << ',' << csv_number(s.p25) << ',' << csv_number(s.median)
      << ',' << csv_number(s.p75) << ',' << csv_number(s.min) << ',' << csv_number(s.max)
      << '\n';
}

}  // namespace

RuCapability capability_from_string(const std::string& s) {
  if (s == "mu") return RuCapability::MicroOnly;
  if (s == "mu+DS" || s == "mu-ds" || s == "mu+ds") return RuCapability::MicroPlusDeep;
  throw ConfigError("unknown variant '" + s + "' (expected mu or mu+DS)");
}

void RunMatrix::validate(const HarnessConfig& config) const {
  if (benchmarks.empty()) throw ConfigError("run matrix has no benchmarks");
  if (variants.empty()) throw ConfigError("run matrix has no variants");
  if (traffics.empty()) throw ConfigError("run matrix has no traffic profiles");
  for (const auto& t : traffics) config.traffic(t);
  for (const auto& b : benchmarks) {
    BenchmarkConfig::preset(b, RuCapability::MicroOnly, config.low, config.sim);
  }
}

std::string hex_digest(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string config_digest(const HarnessConfig& config) {
  std::string text;
  for (const auto& [k, v] : describe(config)) text += k + "=" + v + "\n";
  return hex_digest(fnv1a64(text));
}

std::string calibration_key(const HarnessConfig& config, const TrafficProfile& traffic) {
  static constexpr std::string_view kPrefixes[] = {"grid.",      "link.",  "traffic.",
                                                   "signaling.", "gating.", "calibration."};
  // The arrival model tag invalidates caches written by other generators.
  std::string text = "arrivals=thinned\ntraffic=" + traffic.name +
                     "\ntarget=" + format_number(traffic.target_mean_prb_utilization) + "\n";
  for (const auto& [k, v] : describe(config)) {
    for (auto p : kPrefixes) {
      if (k.starts_with(p)) {
        text += k + "=" + v + "\n";
        break;
      }
    }
  }
  return hex_digest(fnv1a64(text));
}

double measure_utilization(const HarnessConfig& config, const TrafficProfile& traffic,
                           double rate, std::uint64_t seed, double horizon_s) {
  BenchmarkConfig cell =
      BenchmarkConfig::preset("Baseline", RuCapability::MicroOnly, traffic, config.sim);
  cell.horizon_s = horizon_s;
  cell.seeds = 1;
  return run_single(cell, config.sim, rate, seed).measured_utilization;
}

CalibrationRecord calibrate(const HarnessConfig& config, const TrafficProfile& traffic) {
  const auto& cal = config.calibration;
  const TimeGrid grid = TimeGrid::with_horizon(config.sim.subcarrier_spacing_khz, cal.horizon_s);
  CalibrationRecord record;
  record.key = calibration_key(config, traffic);
  record.traffic = traffic.name;
  record.target = traffic.target_mean_prb_utilization;
  record.result = calibrate_arrival_rate(
      traffic, config.sim.link, grid, config.sim.traffic.payload.mean_bits(),
      [&](double rate) {
        double sum = 0.0;
        for (int k = 0; k < cal.replicas; ++k) {
          sum += measure_utilization(config, traffic, rate,
                                     cal.seed + static_cast<std::uint64_t>(k), cal.horizon_s);
        }
        return sum / cal.replicas;
      },
      cal.tolerance, cal.max_iterations);
  return record;
}

CalibrationCache CalibrationCache::load(const std::filesystem::path& path) {
  CalibrationCache cache;
  std::ifstream in(path);
  if (!in) return cache;
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
    for (const auto& e : doc.at("entries")) {
      CalibrationRecord r;
      r.key = e.at("key").get<std::string>();
      r.traffic = e.at("traffic").get<std::string>();
      r.target = e.at("target").get<double>();
      r.result.analytic_rate = e.at("analytic_rate").get<double>();
      r.result.rate = e.at("rate").get<double>();
      r.result.measured_utilization = e.at("measured_utilization").get<double>();
      r.result.iterations = e.at("iterations").get<int>();
      cache.records_[r.key] = r;
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt calibration cache " + path.string() + ": " + e.what());
  }
  return cache;
}

void CalibrationCache::save(const std::filesystem::path& path) const {
  ordered_json doc;
  doc["entries"] = ordered_json::array();
  for (const auto& [key, r] : records_) {
    doc["entries"].push_back({{"key", r.key},
                              {"traffic", r.traffic},
                              {"target", r.target},
                              {"analytic_rate", r.result.analytic_rate},
                              {"rate", r.result.rate},
                              {"measured_utilization", r.result.measured_utilization},
                              {"iterations", r.result.iterations}});
  }
  write_file(path, doc.dump(2) + "\n");
}

const CalibrationRecord& CalibrationCache::get(const HarnessConfig& config,
                                               const TrafficProfile& traffic) {
  const std::string key = calibration_key(config, traffic);
  auto it = records_.find(key);
  if (it == records_.end()) it = records_.emplace(key, calibrate(config, traffic)).first;
  return it->second;
}

MatrixResult run_matrix(const RunMatrix& matrix, const HarnessConfig& config,
                        CalibrationCache& cache, int parallel) {
  config.validate();
  matrix.validate(config);
  std::vector<CellResult> cells;
  for (const auto& b : matrix.benchmarks) {
    for (auto v : matrix.variants) {
      for (const auto& t : matrix.traffics) {
        const TrafficProfile traffic = config.traffic(t);
        CellResult cell;
        cell.config = BenchmarkConfig::preset(b, v, traffic, config.sim);
        cell.arrival_rate = cache.get(config, traffic).result.rate;
        cells.push_back(std::move(cell));
      }
    }
  }
  return run_cells(std::move(cells), config, parallel);
}

MatrixResult run_cells(std::vector<CellResult> cells, const HarnessConfig& config, int parallel) {
  const auto seeds = static_cast<std::size_t>(config.seeds);
  for (auto& cell : cells) {
    cell.config.seeds = config.seeds;
    cell.config.horizon_s = config.horizon_s;
    cell.config.validate(config.sim);
    cell.runs.assign(seeds, RunResult{});
  }

  // Each job writes only its own slot, so the reduction below sees the same
  // data whatever the interleaving.
  const std::size_t jobs = cells.size() * seeds;
  std::vector<char> done(jobs, 0);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t job = next.fetch_add(1);
      if (job >= jobs) return;
      auto& cell = cells[job / seeds];
      const std::size_t i = job % seeds;
      try {
        cell.runs[i] = run_single(cell.config, config.sim, cell.arrival_rate,
                                  config.first_seed + static_cast<std::uint64_t>(i));
        done[job] = 1;
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
      }
    }
  };

  const int threads = std::max(1, std::min<int>(parallel, static_cast<int>(jobs)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  MatrixResult result;
  result.cells = std::move(cells);
  if (first_error) {
    for (std::size_t c = 0; c < result.cells.size(); ++c) {
      auto& runs = result.cells[c].runs;
      std::vector<RunResult> kept;
      for (std::size_t i = 0; i < seeds; ++i) {
        if (done[c * seeds + i]) kept.push_back(std::move(runs[i]));
      }
      runs = std::move(kept);
    }
    std::string what = "run failed";
    try {
      std::rethrow_exception(first_error);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    throw PartialRunError(what, std::move(result));
  }
  return result;
}

void write_session_log(std::ostream& out, const RunResult& run) {
  out << "session,ue,arrival_s,payload_bits,priority,delivered_bits,completion_s,throughput_mbps\n";
  for (const auto& s : run.sessions) {
    if (s.warm_up()) continue;
    out << s.id << ',' << s.ue_id << ',' << csv_number(s.arrival_time) << ','
        << csv_number(s.payload_bits) << ',' << (s.priority == Priority::High ? "high" : "normal")
        << ',' << csv_number(s.delivered_bits) << ',';
    if (s.completion_time) out << csv_number(*s.completion_time);
    out << ',';
    if (auto tp = session_throughput(s)) out << csv_number(*tp);
    out << '\n';
  }
}

std::string raw_csv_header() {
  std::string h =
      "benchmark_id,traffic,seed,mean_power,total_energy,transition_energy,deep_sleep_cycles,"
      "deep_sleep_fraction,prb_utilization,sessions_offered,sessions_completed,"
      "throughput_mean_mbps,throughput_min_mbps,throughput_median_mbps,throughput_max_mbps";
  for (PowerState s : kAllPowerStates) h += ",energy_" + std::string(to_string(s));
  for (std::size_t b = 0; b < GapHistogram::kBuckets; ++b) {
    h += ",gaps_" + GapHistogram::bucket_label(b);
  }
  return h;
}

std::string raw_csv_row(const RunResult& run) {
  std::ostringstream os;
  os << run.benchmark_id << ',' << run.traffic << ',' << run.seed << ','
     << csv_number(run.mean_power) << ',' << csv_number(run.energy.total_energy) << ','
     << csv_number(run.energy.transition_energy) << ',' << run.deep_sleep_cycles << ','
     << csv_number(run.deep_sleep_fraction) << ',' << csv_number(run.measured_utilization)
     << ',' << run.sessions_offered << ',' << run.sessions_completed;
  if (run.throughputs.empty()) {
    os << ",,,,";
  } else {
    const SummaryStats t = summarize(run.throughputs);
    os << ',' << csv_number(t.mean) << ',' << csv_number(t.min) << ','
       << csv_number(t.median) << ',' << csv_number(t.max);
  }
  for (PowerState s : kAllPowerStates) os << ',' << csv_number(run.energy.state_energy(s));
  for (auto count : run.gap_histogram.counts) os << ',' << count;
  return os.str();
}

void write_raw_csv(std::ostream& out, const MatrixResult& result) {
  out << raw_csv_header() << '\n';
  for (const auto& cell : result.cells) {
    for (const auto& run : cell.runs) out << raw_csv_row(run) << '\n';
  }
}

void write_results_csv(std::ostream& out, const MatrixResult& result) {
  out << "benchmark_id,traffic,metric,n,mean,p25,median,p75,min,max\n";
  for (const auto& cell : result.cells) {
    if (cell.runs.empty()) continue;
    std::vector<double> power, energy, util, ds_fraction, cycles, throughput;
    for (const auto& r : cell.runs) {
      power.push_back(r.mean_power);
      energy.push_back(r.energy.total_energy);
      util.push_back(r.measured_utilization);
      ds_fraction.push_back(r.deep_sleep_fraction);
      cycles.push_back(static_cast<double>(r.deep_sleep_cycles));
      throughput.insert(throughput.end(), r.throughputs.begin(), r.throughputs.end());
    }
    summary_row(out, cell, "mean_power", power);
    summary_row(out, cell, "total_energy", energy);
    summary_row(out, cell, "prb_utilization", util);
    summary_row(out, cell, "deep_sleep_fraction", ds_fraction);
    summary_row(out, cell, "deep_sleep_cycles", cycles);
    summary_row(out, cell, "throughput_mbps", throughput);
    // Per-seed saving against the baseline mean, so its mean is the saving
    // of the means.
    if (const CellResult* base = find_baseline(result, cell.config.traffic.name);
        base && !base->runs.empty()) {
      std::vector<double> base_power;
      for (const auto& r : base->runs) base_power.push_back(r.mean_power);
      const double reference = summarize(base_power).mean;
      std::vector<double> saving;
      for (double p : power) saving.push_back(1.0 - p / reference);
      summary_row(out, cell, "power_saving", saving);
    }
  }
}

std::string manifest_json(const ManifestInputs& in) {
  ordered_json doc;
  doc["tool"] = kToolName;
  doc["version"] = kToolVersion;
  doc["mode"] = in.mode;
  doc["config_digest"] = config_digest(*in.config);
  doc["percentile_method"] = kPercentileMethod;
  doc["power_unit"] = "relative (deep sleep = 1)";
  if (in.matrix) {
    ordered_json variants = ordered_json::array();
    for (auto v : in.matrix->variants) variants.push_back(std::string(to_string(v)));
    doc["matrix"] = {{"benchmarks", in.matrix->benchmarks},
                     {"variants", variants},
                     {"traffics", in.matrix->traffics}};
  }
  doc["seeds"] = in.config->seeds;
  doc["first_seed"] = in.config->first_seed;
  doc["horizon_s"] = in.config->horizon_s;
  ordered_json calibration = ordered_json::array();
  if (in.calibration) {
    for (const auto& [key, r] : in.calibration->records()) {
      calibration.push_back({{"traffic", r.traffic},
                             {"target", r.target},
                             {"analytic_rate_per_s", r.result.analytic_rate},
                             {"rate_per_s", r.result.rate},
                             {"measured_utilization", r.result.measured_utilization},
                             {"iterations", r.result.iterations},
                             {"key", r.key}});
    }
  }
  doc["calibration"] = calibration;
  // Traffic knobs moved away from the reference session model so that the
  // band targets hold; listed with the reference value they replace.
  const auto& traffic = in.config->sim.traffic;
  ordered_json knobs = ordered_json::object();
  knobs["traffic.payload_bits"] = {{"value", traffic.payload.fixed_bits}, {"reference", 0.8e6}};
  knobs["traffic.source_rate_mbps"] = {{"value", traffic.source_rate_bps * 1e-6},
                                       {"reference", 0.0}};
  knobs["traffic.chunk_bits"] = {{"value", traffic.chunk_bits}, {"reference", nullptr}};
  doc["tuned_calibration_knobs"] = knobs;
  ordered_json settings = ordered_json::object();
  for (const auto& [k, v] : describe(*in.config)) settings[k] = v;
  doc["config"] = settings;
  return doc.dump(2) + "\n";
}

void write_outputs(const std::filesystem::path& out_dir, const MatrixResult& result,
                   const ManifestInputs& inputs) {
  std::filesystem::create_directories(out_dir);
  std::ostringstream raw;
  write_raw_csv(raw, result);
  write_file(out_dir / "raw.csv", raw.str());
  std::ostringstream summary;
  write_results_csv(summary, result);
  write_file(out_dir / "results.csv", summary.str());
  write_file(out_dir / "manifest.json", manifest_json(inputs));
  if (inputs.calibration) inputs.calibration->save(out_dir / kCalibrationFile);
  std::filesystem::remove(out_dir / "FAILED");
}

void write_failure(const std::filesystem::path& out_dir, const std::string& reason) {
  std::filesystem::create_directories(out_dir);
  write_file(out_dir / "FAILED", reason + "\n");
}

ClosedLoopResult run_closed_loop(const HarnessConfig& config, const TrafficProfile& traffic,
                                 RuCapability capability, const FeatureRegistry& registry,
                                 double arrival_rate, std::uint64_t seed, std::ostream& audit) {
  const auto& orch = config.orchestrator;
  // Logical clock: simulated seconds since the loop started.
  auto record = [&](double t, const std::string& phase, const std::string& inputs,
                    const std::string& action) {
    audit << "t=" << format_number(t) << " traffic=" << traffic.name
          << " variant=" << to_string(capability) << " phase=" << phase
          << " inputs=" << hex_digest(fnv1a64(inputs)) << " action=" << action << '\n';
  };

  std::vector<double> history = {traffic.target_mean_prb_utilization};
  const LoadEstimate estimate =
      estimate_load(history, orch.load_window, orch.confidence_margin);
  Plan plan = prepare(config.policy, estimate, registry, capability, config.sim, orch);
  {
    std::string inputs = "load=" + format_number(estimate.predicted_utilization) +
                         " margin=" + format_number(estimate.confidence_margin) +
                         " capability=" + std::string(to_string(capability));
    for (const auto& c : config.policy.constraints) {
      inputs += " " + std::string(to_string(c.metric)) + "=" + format_number(c.bound);
    }
    record(0.0, "prepare", inputs,
           "plan{" + join_plan(plan) + "}" +
               (plan.diagnostic.empty() ? "" : " diagnostic=\"" + plan.diagnostic + "\""));
  }

  ClosedLoopResult result;
  for (int it = 0; it < orch.max_iterations; ++it) {
    const double t = static_cast<double>(it) * config.horizon_s;
    BenchmarkConfig cell = execute(plan, registry, traffic, config.sim);
    cell.horizon_s = config.horizon_s;
    cell.seeds = 1;
    record(t, "execute", "plan{" + join_plan(plan) + "}", "config=" + cell.label());

    LoopIteration step;
    step.plan = plan;
    step.config = cell;
    step.seed = seed + static_cast<std::uint64_t>(it);
    const RunResult run = run_single(cell, config.sim, arrival_rate, step.seed);
    step.measured_utilization = run.measured_utilization;
    step.kpis = KpiSnapshot::from(run);
    step.action = monitor(step.kpis, plan.guardrails, orch.guard_margin);
    history.push_back(run.measured_utilization);

    std::string inputs = "utilization=" + format_number(run.measured_utilization);
    if (step.kpis.min_throughput_mbps) {
      inputs += " min_throughput_mbps=" + format_number(*step.kpis.min_throughput_mbps);
    }
    record(t + config.horizon_s, "monitor", inputs, std::string(to_string(step.action)));
    result.iterations.push_back(step);

    result.final_plan = plan;
    result.final_config = cell;
    if (step.action == MonitorAction::Keep) {
      result.converged = true;
      break;
    }
    if (step.action == MonitorAction::Relax) {
      Plan relaxed = relax(plan, orch);
      plan = relaxed.active_features == plan.active_features
                 ? minimal_plan(plan, "nothing left to relax")
                 : relaxed;
    } else {
      plan = minimal_plan(plan, "rollback after guardrail breach");
    }
  }
  return result;
}

}  // namespace nes
