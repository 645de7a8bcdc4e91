#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "nes/config.hpp"
#include "nes/error.hpp"
#include "nes/orchestrator.hpp"
#include "nes/simulation.hpp"

namespace nes {

inline constexpr const char* kToolName = "nes_sim";
inline constexpr const char* kToolVersion = "1.0.0";

struct RunMatrix {
  std::vector<std::string> benchmarks = {"Baseline", "Lean160", "TG10", "TG30", "TG60"};
  std::vector<RuCapability> variants = {RuCapability::MicroOnly, RuCapability::MicroPlusDeep};
  std::vector<std::string> traffics = {"Low", "Light", "Medium"};

  /// ConfigError on an empty dimension or an unknown entry.
  void validate(const HarnessConfig& config) const;
};

/// "mu" / "mu+DS" (also "mu-ds" on input).
RuCapability capability_from_string(const std::string& s);

/// 16 lowercase hex digits.
std::string hex_digest(std::uint64_t v);
/// Digest of every effective tunable.
std::string config_digest(const HarnessConfig& config);

struct CalibrationRecord {
  std::string key;  ///< digest of everything the calibrated rate depends on
  std::string traffic;
  double target = 0.0;
  CalibrationResult result;
};

/// Calibrated arrival rates keyed by (traffic, link and traffic model).
class CalibrationCache {
 public:
  static CalibrationCache load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Cached record, or a fresh calibration that is then stored.
  const CalibrationRecord& get(const HarnessConfig& config, const TrafficProfile& traffic);
  const std::map<std::string, CalibrationRecord>& records() const { return records_; }

 private:
  std::map<std::string, CalibrationRecord> records_;
};

std::string calibration_key(const HarnessConfig& config, const TrafficProfile& traffic);

/// Closed-loop calibration on the Baseline with micro sleep only, averaging
/// `replicas` runs starting at the calibration seed.
CalibrationRecord calibrate(const HarnessConfig& config, const TrafficProfile& traffic);

/// Utilization the Baseline reaches with `rate` on one seed and horizon.
double measure_utilization(const HarnessConfig& config, const TrafficProfile& traffic,
                           double rate, std::uint64_t seed, double horizon_s);

struct CellResult {
  BenchmarkConfig config;
  double arrival_rate = 0.0;
  std::vector<RunResult> runs;  ///< seed order
};

struct MatrixResult {
  std::vector<CellResult> cells;  ///< benchmark, then variant, then traffic
};

/// A seed failed; `partial` holds every run that finished, in order.
class PartialRunError : public Error {
 public:
  PartialRunError(const std::string& what, MatrixResult partial)
      : Error(what), partial(std::move(partial)) {}
  MatrixResult partial;
};

/// Runs every cell over `config.seeds` seeds starting at `config.first_seed`
/// on `parallel` worker threads. Results never depend on `parallel`.
MatrixResult run_matrix(const RunMatrix& matrix, const HarnessConfig& config,
                        CalibrationCache& cache, int parallel);

/// Runs the given cells (already configured) over the seed range.
MatrixResult run_cells(std::vector<CellResult> cells, const HarnessConfig& config, int parallel);

/// Per-session completion log of one run (debugging aid).
void write_session_log(std::ostream& out, const RunResult& run);

std::string raw_csv_header();
std::string raw_csv_row(const RunResult& run);
void write_raw_csv(std::ostream& out, const MatrixResult& result);
/// One row per cell and metric; `power_saving` is relative to the Baseline
/// with micro sleep for the same traffic when that cell was run.
void write_results_csv(std::ostream& out, const MatrixResult& result);

struct ManifestInputs {
  const HarnessConfig* config = nullptr;
  const RunMatrix* matrix = nullptr;
  const CalibrationCache* calibration = nullptr;
  std::string mode = "matrix";
};
std::string manifest_json(const ManifestInputs& inputs);

/// Writes raw.csv, results.csv and manifest.json into `out_dir`.
void write_outputs(const std::filesystem::path& out_dir, const MatrixResult& result,
                   const ManifestInputs& inputs);

/// Writes whatever finished plus a FAILED marker with the reason.
void write_failure(const std::filesystem::path& out_dir, const std::string& reason);

struct LoopIteration {
  Plan plan;
  BenchmarkConfig config;
  std::uint64_t seed = 0;
  double measured_utilization = 0.0;
  KpiSnapshot kpis;
  MonitorAction action = MonitorAction::Keep;
};

struct ClosedLoopResult {
  std::vector<LoopIteration> iterations;
  bool converged = false;  ///< last decision was keep
  Plan final_plan;
  BenchmarkConfig final_config;
};

/// prepare -> execute -> simulate -> monitor until the monitor keeps the plan
/// or `config.orchestrator.max_iterations` rounds have run. Every decision is
/// appended to `audit` as one line.
ClosedLoopResult run_closed_loop(const HarnessConfig& config, const TrafficProfile& traffic,
                                 RuCapability capability, const FeatureRegistry& registry,
                                 double arrival_rate, std::uint64_t seed, std::ostream& audit);

}  // namespace nes
