#pragma once

#include "motionorder/core.hpp"
#include "motionorder/datagen.hpp"
#include "motionorder/metrics.hpp"
#include "motionorder/parallel.hpp"
#include "motionorder/render.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace motionorder {

/// A method name with its parameters, written `name[:key=value[:key=value...]]`,
/// e.g. `spc:sigma=0.5` or `cpc:sigma=0.5:cut=2`.
struct MethodSpec {
  std::string name;
  std::map<std::string, std::string> params;

  static MethodSpec parse(const std::string& text);
  /// Canonical `name:key=value...` form with keys sorted.
  std::string label() const;
};

/// Method names accepted by run_method.
const std::vector<std::string>& method_names();
bool method_produces_coords(const std::string& name);

struct MethodRun {
  OrderingSummary ordering;
  std::vector<std::string> warnings;
};

/// Dispatches to the ordering algorithm. `default_seed` applies to randomised methods
/// that have no explicit `seed` parameter. Unknown methods or parameters raise ValidationError.
MethodRun run_method(const TrajectoryDataset& ds, const MethodSpec& method, std::uint64_t default_seed = 1,
                     Exec exec = Exec::parallel);

struct ComparisonRow {
  std::string method;
  std::optional<MethodRun> run;      // empty when the method failed
  std::vector<MetricSeries> metrics; // KSra, KSdi, JMP, CRS, KSte
  double seconds = 0.0;              // ordering time only
  std::string error;
};

struct ComparisonResult {
  std::vector<ComparisonRow> rows;
};

/// Runs and evaluates every method. A failing method is recorded in its row and the run continues.
ComparisonResult run_comparison(const TrajectoryDataset& ds, const std::vector<MethodSpec>& methods,
                                const NeighborSpec& spec = {}, std::uint64_t seed = 1, Exec exec = Exec::parallel);

/// `method,frame,metric,value`; stability metrics use the frame index of the transition's start.
std::string format_metrics_csv(const ComparisonResult& r);
/// `method,metric,mean,max,min,stddev`, or `method,error` rows for failures.
std::string format_summary_csv(const ComparisonResult& r);
/// `method,mean_ksdi,mean_kste,max_kste`.
std::string format_tradeoff_csv(const ComparisonResult& r);
/// `method,seconds`. Kept apart from the other tables because timings vary between runs.
std::string format_runtime_csv(const ComparisonResult& r);

/// 0, 0.01, ..., 1.
std::vector<double> default_sigma_grid();

struct SweepRow {
  double sigma = 0.0;
  double mean_ksdi = 0.0;
  double mean_kste = 0.0;
  double max_kste = 0.0;
  bool same_as_previous = false; // rank arrays identical to the previous sigma's
};

struct SweepResult {
  std::vector<SweepRow> rows;
  /// Largest sigma still producing the same ordering as the first sigma.
  double low_cutoff = 0.0;
  /// Smallest sigma already producing the same ordering as the last sigma.
  double high_cutoff = 0.0;
};

/// SPC over a sigma grid (values in [0,1], ascending).
SweepResult run_sweep(const TrajectoryDataset& ds, const std::vector<double>& sigmas, const NeighborSpec& spec = {},
                      Exec exec = Exec::parallel);
std::string format_sweep_csv(const SweepResult& r);

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a64_hex(const std::string& bytes);
std::string file_digest(const std::filesystem::path& path);

/// JSON run record: command, parameters, seed, input and output digests. No timestamps.
struct Manifest {
  std::string command;
  std::map<std::string, std::string> parameters;
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;

  std::string to_json() const;
  void write(const std::filesystem::path& path) const;
};

struct ExperimentPlan {
  std::optional<std::filesystem::path> input; // CSV file
  std::string generator = "reynolds";         // used when input is empty
  BoidsConfig generator_config;
  bool normalize = false;
  std::vector<MethodSpec> methods;
  NeighborSpec neighbors;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 1;

  bool render = true;
  std::size_t scale = 1;
  std::size_t strip_height = 60;
  double cap_ksdi = kKsdiCap;
  double cap_kste = kKsteCap;
  ColorMode color_mode = ColorMode::frame;
  std::size_t reference_frame = 0;
  bool sweep = false;

  std::map<std::string, std::string> raw; // every key as written, for the manifest

  /// Relative paths resolve against `base_dir`. Unknown keys raise ParseError.
  static ExperimentPlan parse(const std::string& text, const std::filesystem::path& base_dir = {});
  static ExperimentPlan load(const std::filesystem::path& path);
  void validate() const;
};

TrajectoryDataset load_plan_dataset(const ExperimentPlan& plan);

struct PipelineOutputs {
  ComparisonResult comparison;
  std::vector<std::filesystem::path> files; // every file written, manifest excluded
};

/// Comparison tables, per-method ordering CSVs, rugs, metric strips and heat rugs,
/// MotionLines for coordinate methods, the optional sigma sweep, and manifest.json.
PipelineOutputs run_pipeline(const ExperimentPlan& plan, Exec exec = Exec::parallel,
                             const std::optional<std::filesystem::path>& plan_path = {});

} // namespace motionorder
