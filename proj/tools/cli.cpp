#include "cli.hpp"

#include "motionorder/datagen.hpp"
#include "motionorder/dimred.hpp"
#include "motionorder/experiment.hpp"
#include "motionorder/metrics.hpp"
#include "motionorder/render.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace motionorder {

namespace {

namespace fs = std::filesystem;

// Raised for argument problems that CLI11 cannot express (ranges checked before any I/O).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw UsageError(msg);
}

std::map<std::string, std::string> given_options(const CLI::App& sub) {
  std::map<std::string, std::string> out;
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->count() == 0) continue;
    std::string joined;
    for (const auto& r : opt->results()) joined += (joined.empty() ? "" : " ") + r;
    out[opt->get_name()] = joined;
  }
  return out;
}

fs::path manifest_path_for(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

void write_manifest(const std::string& command, const CLI::App& sub, std::uint64_t seed,
                    std::vector<fs::path> inputs, std::vector<fs::path> outputs, const fs::path& where) {
  Manifest m;
  m.command = command;
  m.parameters = given_options(sub);
  m.seed = seed;
  m.inputs = std::move(inputs);
  m.outputs = std::move(outputs);
  m.write(where);
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct MethodFlags {
  std::string method;
  std::optional<double> sigma;
  std::optional<double> cut_factor;
  std::optional<std::size_t> snn_k;
  std::optional<int> bits;
  std::optional<std::size_t> capacity;
  std::optional<int> iterations;
  std::optional<double> perplexity;
  std::vector<std::string> params;

  void add_to(CLI::App* sub) {
    sub->add_option("-m,--method", method, "ordering method, optionally with parameters (e.g. spc:sigma=0.5)");
    sub->add_option("--sigma", sigma, "SPC/CPC stretch threshold in [0,1]");
    sub->add_option("--cut-factor", cut_factor, "CPC cluster cut factor (> 1)");
    sub->add_option("--snn-k", snn_k, "SNN neighbour count");
    sub->add_option("--bits", bits, "grid bits for hil/zor (1-31)");
    sub->add_option("--capacity", capacity, "R-tree node capacity");
    sub->add_option("--iterations", iterations, "optimiser iterations for sam/sne");
    sub->add_option("--perplexity", perplexity, "t-SNE perplexity");
    sub->add_option("--param", params, "extra method parameter key=value (repeatable)");
  }

  // Range checks that must fire before any data is read.
  void check() const {
    if (sigma) require(*sigma >= 0.0 && *sigma <= 1.0, "--sigma must lie in [0,1], got " + std::to_string(*sigma));
    if (cut_factor) require(*cut_factor > 1.0, "--cut-factor must be greater than 1");
    if (snn_k) require(*snn_k >= 1, "--snn-k must be at least 1");
    if (bits) require(*bits >= 1 && *bits <= 31, "--bits must lie in [1,31]");
    if (capacity) require(*capacity >= 2, "--capacity must be at least 2");
    if (iterations) require(*iterations >= 1, "--iterations must be at least 1");
    if (perplexity) require(*perplexity >= 2.0, "--perplexity must be at least 2");
  }

  MethodSpec spec() const {
    require(!method.empty(), "--method is required");
    MethodSpec m;
    try {
      m = MethodSpec::parse(method);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    const auto& names = method_names();
    if (std::find(names.begin(), names.end(), m.name) == names.end()) {
      std::string list;
      for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
      throw UsageError("unknown method '" + m.name + "' (expected one of " + list + ")");
    }
    auto put = [&](const char* key, const std::string& v) { m.params[key] = v; };
    auto num = [](double v) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      return std::string(buf);
    };
    if (sigma) put("sigma", num(*sigma));
    if (cut_factor) put("cut", num(*cut_factor));
    if (snn_k) put("k", std::to_string(*snn_k));
    if (bits) put("bits", std::to_string(*bits));
    if (capacity) put("capacity", std::to_string(*capacity));
    if (iterations) put("iterations", std::to_string(*iterations));
    if (perplexity) put("perplexity", num(*perplexity));
    for (const auto& p : params) {
      const auto eq = p.find('=');
      require(eq != std::string::npos && eq > 0, "--param expects key=value, got '" + p + "'");
      m.params[p.substr(0, eq)] = p.substr(eq + 1);
    }
    return m;
  }
};

TrajectoryDataset load_input(const std::optional<std::string>& input, bool normalize_input) {
  require(input.has_value(), "--input is required");
  TrajectoryDataset ds = load_csv(*input);
  return normalize_input ? normalize(ds) : ds;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stable one-dimensional orderings of moving entities for dense visual summaries"};
  app.name("motionorder");
  app.require_subcommand(1, 1);
  app.failure_message(CLI::FailureMessage::help);

  int threads = 0;
  bool quiet = false;
  app.add_option("--threads", threads, "worker threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  app.add_flag("-q,--quiet", quiet, "suppress warnings and summaries");

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic trajectory dataset");
  std::string model = "reynolds";
  std::optional<std::size_t> gen_clusters, gen_boids, gen_frames, gen_warmup;
  std::uint64_t seed = 1;
  std::optional<std::string> gen_config;
  std::string gen_output;
  gen->add_option("--model", model, "reynolds or flocking")->check(CLI::IsMember({"reynolds", "flocking"}));
  gen->add_option("--clusters", gen_clusters, "number of clusters (reynolds)");
  gen->add_option("--boids", gen_boids, "entities per cluster");
  gen->add_option("--frames", gen_frames, "recorded frames");
  gen->add_option("--warmup", gen_warmup, "simulated frames discarded before recording");
  gen->add_option("--seed", seed, "random seed");
  gen->add_option("--config", gen_config, "key = value generator settings file");
  gen->add_option("-o,--output", gen_output, "output CSV")->required();

  // order
  auto* ord = app.add_subcommand("order", "compute a per-frame ordering");
  std::optional<std::string> input;
  std::string output;
  std::optional<std::string> coords_out;
  bool normalize_input = false;
  MethodFlags mflags;
  ord->add_option("-i,--input", input, "input CSV (frame,id,x,y)");
  ord->add_option("-o,--output", output, "ordering CSV (frame,rank,id)");
  ord->add_option("--coords", coords_out, "also write 1D coordinates (coordinate methods only)");
  ord->add_option("--seed", seed, "seed for randomised methods");
  ord->add_flag("--normalize", normalize_input, "scale the data into the unit square first");
  mflags.add_to(ord);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "compute quality and stability metrics for an ordering");
  std::optional<std::string> ordering_in;
  std::size_t k = 10;
  std::string label;
  ev->add_option("-i,--input", input, "input CSV");
  ev->add_option("--ordering", ordering_in, "ordering CSV")->required();
  ev->add_option("-k,--neighbors", k, "neighbour count for the KS metrics")->check(CLI::PositiveNumber);
  ev->add_option("--label", label, "method label used in the tables");
  ev->add_option("-o,--output", output, "output directory")->required();

  // sweep
  auto* sw = app.add_subcommand("sweep", "SPC sigma sweep");
  std::size_t steps = 100;
  sw->add_option("-i,--input", input, "input CSV");
  sw->add_option("-k,--neighbors", k, "neighbour count for the KS metrics")->check(CLI::PositiveNumber);
  sw->add_option("--steps", steps, "grid intervals over [0,1]")->check(CLI::PositiveNumber);
  sw->add_option("-o,--output", output, "sweep CSV")->required();
  sw->add_flag("--normalize", normalize_input, "scale the data into the unit square first");

  // render
  auto* rd = app.add_subcommand("render", "render a rug, strip, heat rug or MotionLines image");
  std::string kind = "rug";
  std::optional<std::string> coords_in;
  std::size_t scale = 1;
  double cap_ksdi = kKsdiCap, cap_kste = kKsteCap;
  std::string color_mode = "frame";
  std::size_t reference_frame = 0;
  std::size_t height = 0;
  rd->add_option("-i,--input", input, "input CSV");
  rd->add_option("--ordering", ordering_in, "ordering CSV")->required();
  rd->add_option("--coords", coords_in, "coordinates CSV (needed for lines)");
  rd->add_option("--kind", kind, "rug, lines, strip-ksdi, strip-kste, heat-ksdi or heat-kste")
      ->check(CLI::IsMember({"rug", "lines", "strip-ksdi", "strip-kste", "heat-ksdi", "heat-kste"}));
  rd->add_option("--scale", scale, "pixels per cell")->check(CLI::PositiveNumber);
  rd->add_option("--cap-ksdi", cap_ksdi, "KSdi strip ceiling");
  rd->add_option("--cap-kste", cap_kste, "KSte strip ceiling");
  rd->add_option("--color-mode", color_mode, "frame or reference")->check(CLI::IsMember({"frame", "reference"}));
  rd->add_option("--reference-frame", reference_frame, "frame used by --color-mode reference");
  rd->add_option("--height", height, "image height for strips and lines");
  rd->add_option("-k,--neighbors", k, "neighbour count for metric images")->check(CLI::PositiveNumber);
  rd->add_option("-o,--output", output, "output PNG")->required();

  // pipeline
  auto* pl = app.add_subcommand("pipeline", "run a comparison plan end to end");
  std::string plan_file;
  std::optional<std::string> out_dir;
  pl->add_option("-c,--config", plan_file, "plan file")->required();
  pl->add_option("-o,--output", out_dir, "output directory (overrides the plan)");

  // bench
  auto* bn = app.add_subcommand("bench", "time an ordering method serially and in parallel");
  std::size_t repeat = 3;
  bn->add_option("-i,--input", input, "input CSV (default: generated Reynolds data)");
  bn->add_option("--frames", gen_frames, "frames of generated data");
  bn->add_option("--seed", seed, "seed for generated data and randomised methods");
  bn->add_option("--repeat", repeat, "timed repetitions per mode")->check(CLI::PositiveNumber);
  mflags.add_to(bn);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  if (threads > 0) set_threads(threads);
  auto warn = [&](const std::vector<std::string>& ws) {
    if (!quiet)
      for (const auto& w : ws) err << "warning: " << w << "\n";
  };

  CLI::App* active = app.get_subcommands().front();
  try {
    if (active == gen) {
      BoidsConfig cfg;
      if (model == "flocking") {
        cfg.clusters = 1;
        cfg.boids_per_cluster = 100;
      }
      if (gen_config) cfg.apply(KeyValueFile::load(*gen_config));
      if (gen_clusters) cfg.clusters = *gen_clusters;
      if (gen_boids) cfg.boids_per_cluster = *gen_boids;
      if (gen_frames) cfg.frames = *gen_frames;
      if (gen_warmup) cfg.warmup = *gen_warmup;
      if (gen->count("--seed") > 0 || !gen_config) cfg.seed = seed;
      require(cfg.clusters >= 1 && cfg.boids_per_cluster >= 1 && cfg.frames >= 1,
              "--clusters, --boids and --frames must be at least 1");
      if (model == "flocking") require(cfg.clusters == 1, "the flocking model takes --clusters 1");
      const TrajectoryDataset ds = model == "flocking" ? gen_flocking(cfg) : gen_reynolds_clusters(cfg);
      save_csv(ds, gen_output);
      std::vector<fs::path> inputs;
      if (gen_config) inputs.emplace_back(*gen_config);
      write_manifest("generate", *gen, cfg.seed, inputs, {gen_output}, manifest_path_for(gen_output));
      if (!quiet) out << "wrote " << ds.num_entities() << " entities x " << ds.num_frames() << " frames to " << gen_output << "\n";
    } else if (active == ord) {
      mflags.check();
      const MethodSpec spec = mflags.spec();
      require(!output.empty(), "--output is required");
      if (coords_out) require(method_produces_coords(spec.name), "method " + spec.name + " produces no coordinates");
      const TrajectoryDataset ds = load_input(input, normalize_input);
      const MethodRun run = run_method(ds, spec, seed);
      warn(run.warnings);
      save_ordering_csv(ds, run.ordering, output);
      std::vector<fs::path> outputs{output};
      if (coords_out) {
        save_coords_csv(ds, run.ordering, *coords_out);
        outputs.emplace_back(*coords_out);
      }
      write_manifest("order", *ord, seed, {*input}, outputs, manifest_path_for(output));
      if (!quiet) out << run.ordering.method_tag() << ": wrote " << output << "\n";
    } else if (active == ev) {
      const TrajectoryDataset ds = load_input(input, false);
      const OrderingSummary o = load_ordering_csv(ds, *ordering_in);
      NeighborSpec spec{k};
      if (auto w = spec.clamp_warning(ds.num_entities())) warn({*w});
      ComparisonResult r;
      ComparisonRow row;
      row.method = label.empty() ? fs::path(*ordering_in).stem().string() : label;
      row.metrics = evaluate(ds, o, spec);
      r.rows.push_back(std::move(row));
      fs::create_directories(output);
      const fs::path dir(output);
      write_file(dir / "metrics.csv", format_metrics_csv(r));
      write_file(dir / "summary.csv", format_summary_csv(r));
      write_file(dir / "tradeoff.csv", format_tradeoff_csv(r));
      write_manifest("evaluate", *ev, 0, {*input, *ordering_in},
                     {dir / "metrics.csv", dir / "summary.csv", dir / "tradeoff.csv"}, dir / "manifest.json");
      if (!quiet) {
        out << "metric      mean        max         min         stddev\n";
        for (const auto& s : r.rows[0].metrics) {
          char line[160];
          std::snprintf(line, sizeof line, "%-6s %11.4f %11.4f %11.4f %11.4f\n", s.name.c_str(), s.summary.mean,
                        s.summary.max, s.summary.min, s.summary.stddev);
          out << line;
        }
      }
    } else if (active == sw) {
      const TrajectoryDataset ds = load_input(input, normalize_input);
      std::vector<double> grid(steps + 1);
      for (std::size_t i = 0; i <= steps; ++i) grid[i] = static_cast<double>(i) / static_cast<double>(steps);
      NeighborSpec spec{k};
      if (auto w = spec.clamp_warning(ds.num_entities())) warn({*w});
      const SweepResult r = run_sweep(ds, grid, spec);
      write_file(output, format_sweep_csv(r));
      write_manifest("sweep", *sw, 0, {*input}, {output}, manifest_path_for(output));
      if (!quiet)
        out << r.rows.size() << " sigma values; orderings constant below sigma=" << fixed(r.low_cutoff, 2)
            << " and from sigma=" << fixed(r.high_cutoff, 2) << "\n";
    } else if (active == rd) {
      require(cap_ksdi > 0.0 && cap_kste > 0.0, "--cap-ksdi and --cap-kste must be positive");
      const TrajectoryDataset ds = load_input(input, false);
      if (kind == "lines") require(coords_in.has_value(), "--kind lines needs --coords from a coordinate method");
      const OrderingSummary o =
          load_ordering_csv(ds, *ordering_in, coords_in ? std::optional<fs::path>(*coords_in) : std::nullopt);
      Colormap2D cm = Colormap2D::for_dataset(ds);
      cm.mode = parse_color_mode(color_mode);
      cm.reference_frame = reference_frame;
      const NeighborSpec spec{k};
      Image img;
      if (kind == "rug") {
        img = render_rug(ds, o, cm, scale);
      } else if (kind == "lines") {
        MotionLinesLayout layout;
        layout.column_width = scale;
        layout.height = height > 0 ? height : std::max<std::size_t>(2 * ds.num_entities() * scale, 2 * layout.margin + 2);
        img = render_motionlines(ds, o, cm, layout);
      } else if (kind == "strip-ksdi" || kind == "strip-kste") {
        const auto series = evaluate(ds, o, spec);
        const bool di = kind == "strip-ksdi";
        const auto& s = series[di ? 1 : 4];
        require(!s.values.empty(), "a KSte strip needs at least two frames");
        img = render_metric_strip(s.values, di ? cap_ksdi : cap_kste, height > 0 ? height : 60, ds.num_frames(), scale,
                                  di ? kKsdiColor : kKsteColor);
      } else if (kind == "heat-ksdi") {
        img = render_heat_rug(o, ksdi_contribution_table(ds, o, spec), scale, kKsdiColor);
      } else {
        img = render_heat_rug(o, kste_contribution_table(o, spec), scale, kKsteColor);
      }
      write_png(img, output, {{"Software", "motionorder"}, {"Colormap", cm.describe()}});
      std::vector<fs::path> inputs{*input, *ordering_in};
      if (coords_in) inputs.emplace_back(*coords_in);
      write_manifest("render", *rd, 0, inputs, {output}, manifest_path_for(output));
      if (!quiet) out << "wrote " << img.width() << "x" << img.height() << " image to " << output << "\n";
    } else if (active == pl) {
      ExperimentPlan plan = ExperimentPlan::load(plan_file);
      if (out_dir) plan.output_dir = *out_dir;
      const PipelineOutputs res = run_pipeline(plan, Exec::parallel, fs::path(plan_file));
      for (const auto& row : res.comparison.rows) {
        if (!row.error.empty()) {
          err << "method " << row.method << " failed: " << row.error << "\n";
          continue;
        }
        warn(row.run->warnings);
      }
      if (!quiet) out << "wrote " << res.files.size() << " files to " << plan.output_dir.string() << "\n";
      bool any_ok = false;
      for (const auto& row : res.comparison.rows) any_ok = any_ok || row.error.empty();
      if (!any_ok) return 2;
    } else if (active == bn) {
      mflags.check();
      if (mflags.method.empty()) mflags.method = "spc";
      const MethodSpec spec = mflags.spec();
      TrajectoryDataset ds;
      if (input) {
        ds = load_csv(*input);
      } else {
        BoidsConfig cfg;
        cfg.frames = gen_frames.value_or(500);
        cfg.seed = seed;
        ds = gen_reynolds_clusters(cfg);
      }
      auto time_mode = [&](Exec exec, OrderingSummary& result) {
        double best = 0.0;
        for (std::size_t r = 0; r < repeat; ++r) {
          const auto start = std::chrono::steady_clock::now();
          result = run_method(ds, spec, seed, exec).ordering;
          const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          best = r == 0 ? s : std::min(best, s);
        }
        return best;
      };
      OrderingSummary serial_result, parallel_result;
      const double ts = time_mode(Exec::serial, serial_result);
      const double tp = time_mode(Exec::parallel, parallel_result);
      const bool same = serial_result.all_ranks() == parallel_result.all_ranks() &&
                        serial_result.all_coords() == parallel_result.all_coords();
      out << spec.label() << " on " << ds.num_entities() << " x " << ds.num_frames() << ", " << max_threads()
          << " threads\n";
      out << "serial   " << fixed(ts) << " s\nparallel " << fixed(tp) << " s\nspeedup  " << fixed(ts / tp, 2)
          << "\nidentical " << (same ? "yes" : "no") << "\n";
      if (!same) return 2;
    }
  } catch (const UsageError& e) {
    err << active->get_name() << ": " << e.what() << "\n\n" << active->help();
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

} // namespace motionorder
