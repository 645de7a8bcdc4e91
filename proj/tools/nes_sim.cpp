// Command-line driver: runs the benchmark matrix, calibrates traffic, or
// drives the orchestrator in closed loop.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "nes/config.hpp"
#include "nes/error.hpp"
#include "nes/harness.hpp"
#include "nes/orchestrator.hpp"

namespace {

struct Options {
  std::string config_path;
  std::vector<std::string> benchmarks;
  std::vector<std::string> variants;
  std::vector<std::string> traffics;
  std::optional<int> seeds;
  std::optional<double> horizon;
  std::string out = "results";
  int parallel = 0;
  bool calibrate_only = false;
  bool orchestrate = false;
  std::string registry_path;
};

nes::RunMatrix build_matrix(const Options& opt) {
  nes::RunMatrix m;
  if (!opt.benchmarks.empty()) m.benchmarks = opt.benchmarks;
  if (!opt.traffics.empty()) m.traffics = opt.traffics;
  if (!opt.variants.empty()) {
    m.variants.clear();
    for (const auto& v : opt.variants) m.variants.push_back(nes::capability_from_string(v));
  }
  return m;
}

int calibrate_only(const nes::HarnessConfig& config, const nes::RunMatrix& matrix,
                   nes::CalibrationCache& cache, const std::filesystem::path& out) {
  if (matrix.traffics.empty()) throw nes::ConfigError("no traffic profiles to calibrate");
  std::printf("%-8s %8s %14s %14s %12s %5s\n", "traffic", "target", "analytic/s", "rate/s",
              "measured", "iter");
  for (const auto& t : matrix.traffics) {
    const auto& r = cache.get(config, config.traffic(t));
    std::printf("%-8s %8.4f %14.6f %14.6f %12.6f %5d\n", t.c_str(), r.target,
                r.result.analytic_rate, r.result.rate, r.result.measured_utilization,
                r.result.iterations);
  }
  std::filesystem::create_directories(out);
  cache.save(out / "calibration.json");
  return 0;
}

int orchestrate(const nes::HarnessConfig& config, const nes::RunMatrix& matrix,
                nes::CalibrationCache& cache, const nes::FeatureRegistry& registry,
                const std::filesystem::path& out, int parallel) {
  std::filesystem::create_directories(out);
  std::ofstream audit(out / "audit.log", std::ios::app);
  if (!audit) throw nes::IoError("cannot open " + (out / "audit.log").string());

  std::vector<nes::CellResult> cells;
  for (auto variant : matrix.variants) {
    for (const auto& t : matrix.traffics) {
      const auto traffic = config.traffic(t);
      const double rate = cache.get(config, traffic).result.rate;
      const auto loop = nes::run_closed_loop(config, traffic, variant, registry, rate,
                                             config.first_seed, audit);
      std::printf("%-6s %-6s %s after %zu round(s): %s\n", t.c_str(),
                  std::string(nes::to_string(variant)).c_str(),
                  loop.converged ? "kept" : "not settled", loop.iterations.size(),
                  loop.final_config.label().c_str());
      cells.push_back({loop.final_config, rate, {}});
    }
  }
  const auto result = nes::run_cells(std::move(cells), config, parallel);
  nes::ManifestInputs inputs{&config, &matrix, &cache, "orchestrate"};
  nes::write_outputs(out, result, inputs);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symbol-level gNB energy-saving simulator and feature orchestrator"};
  Options opt;
  app.add_option("--config", opt.config_path, "key = value configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--benchmarks", opt.benchmarks, "Baseline, Lean160, TG10, TG30, TG60, TG<ms>")
      ->delimiter(',');
  app.add_option("--variants", opt.variants, "mu, mu+DS")->delimiter(',');
  app.add_option("--traffics", opt.traffics, "Low, Light, Medium")->delimiter(',');
  app.add_option("--seeds", opt.seeds, "seeds per cell (overrides run.seeds)")
      ->check(CLI::PositiveNumber);
  app.add_option("--horizon", opt.horizon, "seconds per seed (overrides run.horizon_s)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", opt.out, "output directory")->capture_default_str();
  app.add_option("--parallel", opt.parallel, "worker threads (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--calibrate-only", opt.calibrate_only, "calibrate arrival rates and stop");
  app.add_flag("--orchestrate", opt.orchestrate, "closed loop through the orchestrator");
  app.add_option("--registry", opt.registry_path, "feature registry file")
      ->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);

  const std::filesystem::path out = opt.out;
  try {
    nes::HarnessConfig config =
        opt.config_path.empty() ? nes::HarnessConfig{} : nes::load_config(opt.config_path);
    if (opt.seeds) config.seeds = *opt.seeds;
    if (opt.horizon) config.horizon_s = *opt.horizon;
    config.validate();
    const nes::RunMatrix matrix = build_matrix(opt);
    matrix.validate(config);
    const int parallel = opt.parallel > 0
                             ? opt.parallel
                             : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    nes::CalibrationCache cache = nes::CalibrationCache::load(out / "calibration.json");

    if (opt.calibrate_only) return calibrate_only(config, matrix, cache, out);
    if (opt.orchestrate) {
      const auto registry = opt.registry_path.empty()
                                ? nes::FeatureRegistry::builtin()
                                : nes::FeatureRegistry::load(opt.registry_path);
      return orchestrate(config, matrix, cache, registry, out, parallel);
    }
    if (!opt.registry_path.empty()) nes::FeatureRegistry::load(opt.registry_path);

    const auto result = nes::run_matrix(matrix, config, cache, parallel);
    nes::ManifestInputs inputs{&config, &matrix, &cache, "matrix"};
    nes::write_outputs(out, result, inputs);
    std::printf("wrote %s (%zu cells x %d seeds)\n", out.string().c_str(), result.cells.size(),
                config.seeds);
    return 0;
  } catch (const nes::PartialRunError& e) {
    std::fprintf(stderr, "nes_sim: error: %s\n", e.what());
    try {
      nes::write_failure(out, e.what());
      std::ofstream raw(out / "raw.csv", std::ios::trunc);
      nes::write_raw_csv(raw, e.partial);
    } catch (const std::exception& inner) {
      std::fprintf(stderr, "nes_sim: could not flush partial results: %s\n", inner.what());
    }
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "nes_sim: error: %s\n", e.what());
    return 1;
  }
}
