#include "motionorder/experiment.hpp"

#include "motionorder/cluster.hpp"
#include "motionorder/dimred.hpp"
#include "motionorder/keyvalue.hpp"
#include "motionorder/spatial.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace motionorder {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

bool parse_bool(const std::string& v, const std::string& what, std::size_t line) {
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ParseError("expected true or false for " + what + ", got '" + v + "'", static_cast<long>(line));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim_copy(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

} // namespace

// ---------------------------------------------------------------------------
// Methods

MethodSpec MethodSpec::parse(const std::string& text) {
  const auto parts = split(trim_copy(text), ':');
  if (parts.empty() || parts[0].empty()) throw ValidationError("empty method name");
  MethodSpec m;
  m.name = parts[0];
  std::transform(m.name.begin(), m.name.end(), m.name.begin(), [](unsigned char c) { return std::tolower(c); });
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string::npos || eq == 0)
      throw ValidationError("method parameter '" + parts[i] + "' must look like key=value");
    const std::string key = trim_copy(parts[i].substr(0, eq));
    if (!m.params.emplace(key, trim_copy(parts[i].substr(eq + 1))).second)
      throw ValidationError("parameter '" + key + "' given twice for method " + m.name);
  }
  return m;
}

std::string MethodSpec::label() const {
  std::string s = name;
  for (const auto& [k, v] : params) s += ":" + k + "=" + v;
  return s;
}

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {"fxd", "hil", "zor", "pqr",  "rtr", "clc", "snn",
                                                 "sam", "samp", "sne", "snep", "spc", "cpc", "pca"};
  return names;
}

bool method_produces_coords(const std::string& name) {
  static const std::set<std::string> with = {"sam", "samp", "sne", "snep", "spc", "cpc", "pca"};
  return with.count(name) > 0;
}

namespace {

class Params {
public:
  Params(const MethodSpec& m, std::set<std::string> allowed) : m_(m) {
    for (const auto& [k, v] : m.params)
      if (!allowed.count(k)) {
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        throw ValidationError("method " + m.name + " does not take parameter '" + k + "'" +
                              (list.empty() ? std::string(" (it has no parameters)") : " (accepted: " + list + ")"));
      }
  }
  double real(const std::string& key, double fallback) const {
    auto it = m_.params.find(key);
    return it == m_.params.end() ? fallback : parse_double(it->second, m_.name + " parameter " + key);
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) const {
    auto it = m_.params.find(key);
    return it == m_.params.end() ? fallback : parse_int(it->second, m_.name + " parameter " + key);
  }
  std::uint64_t seed(std::uint64_t fallback) const {
    auto it = m_.params.find("seed");
    return it == m_.params.end() ? fallback : parse_uint(it->second, m_.name + " parameter seed");
  }

private:
  const MethodSpec& m_;
};

std::size_t positive_count(std::int64_t v, const std::string& what) {
  if (v < 1) throw ValidationError(what + " must be at least 1");
  return static_cast<std::size_t>(v);
}

} // namespace

MethodRun run_method(const TrajectoryDataset& ds, const MethodSpec& method, std::uint64_t default_seed, Exec exec) {
  const std::string& name = method.name;
  MethodRun out;
  if (ds.num_entities() == 0 || ds.num_frames() == 0) throw ValidationError("dataset is empty");

  if (name == "fxd") {
    Params p(method, {});
    out.ordering = fxd_order(ds);
  } else if (name == "hil" || name == "zor") {
    Params p(method, {"bits"});
    GridDiscretization disc;
    disc.bits = static_cast<int>(p.integer("bits", disc.bits));
    disc.validate();
    out.ordering = name == "hil" ? hilbert_order(ds, disc, exec) : zorder_order(ds, disc, exec);
  } else if (name == "pqr") {
    Params p(method, {});
    out.ordering = quadtree_order(ds, exec);
  } else if (name == "rtr") {
    Params p(method, {"capacity"});
    const auto cap = p.integer("capacity", 8);
    if (cap < 2) throw ValidationError("R-tree capacity must be at least 2");
    out.ordering = rtree_order(ds, static_cast<std::size_t>(cap), exec);
  } else if (name == "clc") {
    Params p(method, {});
    out.ordering = clc_order(ds, exec);
  } else if (name == "snn") {
    Params p(method, {"k"});
    const std::size_t k = positive_count(p.integer("k", 10), "SNN k");
    if (ds.num_entities() > 1 && k > ds.num_entities() - 1)
      out.warnings.push_back("snn: k=" + std::to_string(k) + " clamped to " + std::to_string(ds.num_entities() - 1));
    out.ordering = snn_order(ds, k, exec);
  } else if (name == "spc" || name == "pca") {
    if (name == "pca") {
      Params p(method, {});
      out.ordering = pca_order(ds);
    } else {
      Params p(method, {"sigma"});
      SpcConfig cfg;
      cfg.sigma = p.real("sigma", cfg.sigma);
      cfg.validate();
      out.ordering = spc_order(ds, cfg, exec);
    }
  } else if (name == "cpc") {
    Params p(method, {"sigma", "cut"});
    CpcConfig cfg;
    cfg.spc.sigma = p.real("sigma", cfg.spc.sigma);
    cfg.cut_factor = p.real("cut", cfg.cut_factor);
    cfg.spc.validate();
    if (!(cfg.cut_factor > 1.0)) throw ValidationError("cut factor must be greater than 1");
    out.ordering = cpc_order(ds, cfg, exec);
  } else if (name == "sam" || name == "samp") {
    Params p(method, {"iterations", "step", "seed"});
    SammonConfig cfg;
    cfg.iterations = static_cast<int>(p.integer("iterations", cfg.iterations));
    cfg.step = p.real("step", cfg.step);
    cfg.seed = p.seed(default_seed);
    cfg.init = name == "samp" ? EmbedInit::previous_frame : EmbedInit::random;
    auto emb = sammon_embed(ds, cfg, exec);
    out.warnings = emb.warnings;
    out.ordering = emb.to_ordering(name + ":iterations=" + std::to_string(cfg.iterations) +
                                   ":seed=" + std::to_string(cfg.seed) + ":step=" + short_fmt(cfg.step));
    return out;
  } else if (name == "sne" || name == "snep") {
    Params p(method, {"perplexity", "iterations", "learning_rate", "exaggeration", "seed"});
    TsneConfig cfg;
    cfg.perplexity = p.real("perplexity", cfg.perplexity);
    cfg.iterations = static_cast<int>(p.integer("iterations", cfg.iterations));
    cfg.learning_rate = p.real("learning_rate", cfg.learning_rate);
    cfg.exaggeration = p.real("exaggeration", cfg.exaggeration);
    cfg.seed = p.seed(default_seed);
    cfg.init = name == "snep" ? EmbedInit::previous_frame : EmbedInit::random;
    auto emb = tsne_embed(ds, cfg, exec);
    out.warnings = emb.warnings;
    out.ordering = emb.to_ordering(name + ":iterations=" + std::to_string(cfg.iterations) +
                                   ":perplexity=" + short_fmt(cfg.perplexity) + ":seed=" + std::to_string(cfg.seed));
    return out;
  } else {
    std::string list;
    for (const auto& n : method_names()) list += (list.empty() ? "" : ", ") + n;
    throw ValidationError("unknown method '" + name + "' (expected one of " + list + ")");
  }
  out.ordering.set_method_tag(method.label());
  return out;
}

// ---------------------------------------------------------------------------
// Comparison

ComparisonResult run_comparison(const TrajectoryDataset& ds, const std::vector<MethodSpec>& methods,
                                const NeighborSpec& spec, std::uint64_t seed, Exec exec) {
  if (methods.empty()) throw ValidationError("at least one method is required");
  ComparisonResult result;
  const auto neighbors = precompute_neighbors(ds, spec, exec);
  for (const auto& m : methods) {
    ComparisonRow row;
    row.method = m.label();
    try {
      const auto start = std::chrono::steady_clock::now();
      MethodRun run = run_method(ds, m, seed, exec);
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      row.metrics = evaluate(ds, run.ordering, spec, exec, &neighbors);
      row.run = std::move(run);
    } catch (const Error& e) {
      row.error = e.what();
      row.run.reset();
      row.metrics.clear();
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::string format_metrics_csv(const ComparisonResult& r) {
  std::string out = "method,frame,metric,value\n";
  for (const auto& row : r.rows)
    for (const auto& s : row.metrics)
      for (std::size_t t = 0; t < s.values.size(); ++t)
        out += row.method + "," + std::to_string(t) + "," + s.name + "," + fmt(s.values[t]) + "\n";
  return out;
}

std::string format_summary_csv(const ComparisonResult& r) {
  std::string out = "method,metric,mean,max,min,stddev,error\n";
  for (const auto& row : r.rows) {
    if (!row.error.empty()) {
      std::string msg = row.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out += row.method + ",,,,,," + msg + "\n";
      continue;
    }
    for (const auto& s : row.metrics)
      out += row.method + "," + s.name + "," + fmt(s.summary.mean) + "," + fmt(s.summary.max) + "," +
             fmt(s.summary.min) + "," + fmt(s.summary.stddev) + ",\n";
  }
  return out;
}

std::string format_tradeoff_csv(const ComparisonResult& r) {
  std::string out = "method,mean_ksdi,mean_kste,max_kste\n";
  for (const auto& row : r.rows) {
    if (!row.error.empty()) continue;
    const MetricSeries* di = nullptr;
    const MetricSeries* te = nullptr;
    for (const auto& s : row.metrics) {
      if (s.name == "KSdi") di = &s;
      if (s.name == "KSte") te = &s;
    }
    out += row.method + "," + fmt(di->summary.mean) + "," + fmt(te->summary.mean) + "," + fmt(te->summary.max) + "\n";
  }
  return out;
}

std::string format_runtime_csv(const ComparisonResult& r) {
  std::string out = "method,seconds\n";
  for (const auto& row : r.rows) out += row.method + "," + (row.error.empty() ? fmt(row.seconds) : "") + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Sigma sweep

std::vector<double> default_sigma_grid() {
  std::vector<double> g(101);
  for (std::size_t i = 0; i <= 100; ++i) g[i] = static_cast<double>(i) / 100.0;
  return g;
}

SweepResult run_sweep(const TrajectoryDataset& ds, const std::vector<double>& sigmas, const NeighborSpec& spec,
                      Exec exec) {
  if (sigmas.empty()) throw ValidationError("sigma grid is empty");
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    SpcConfig{sigmas[i]}.validate();
    if (i > 0 && !(sigmas[i] > sigmas[i - 1])) throw ValidationError("sigma grid must be strictly ascending");
  }
  const std::size_t T = ds.num_frames();
  const auto neighbors = precompute_neighbors(ds, spec, exec);
  SweepResult result;
  std::vector<Rank> previous;
  std::vector<double> di(T), te(T > 0 ? T - 1 : 0);
  for (double sigma : sigmas) {
    const OrderingSummary ord = project_order(ds, spc_timeline(ds, SpcConfig{sigma}), exec);
    SweepRow row;
    row.sigma = sigma;
    row.same_as_previous = !previous.empty() && previous == ord.all_ranks();
    if (row.same_as_previous) {
      const SweepRow& last = result.rows.back();
      row.mean_ksdi = last.mean_ksdi;
      row.mean_kste = last.mean_kste;
      row.max_kste = last.max_kste;
    } else {
      parallel_for(exec, T, [&](std::size_t t) {
        di[t] = ksdi(neighbors[t], ord.ranks(t));
        if (t + 1 < T) te[t] = kste(ord.ranks(t), ord.ranks(t + 1), spec);
      });
      row.mean_ksdi = MetricSeries::summarize(di).mean;
      const auto s = MetricSeries::summarize(te);
      row.mean_kste = s.mean;
      row.max_kste = s.max;
      previous = ord.all_ranks();
    }
    result.rows.push_back(row);
  }
  std::size_t low = 0;
  while (low + 1 < result.rows.size() && result.rows[low + 1].same_as_previous) ++low;
  std::size_t high = result.rows.size() - 1;
  while (high > 0 && result.rows[high].same_as_previous) --high;
  result.low_cutoff = result.rows[low].sigma;
  result.high_cutoff = result.rows[high].sigma;
  return result;
}

std::string format_sweep_csv(const SweepResult& r) {
  std::string out = "sigma,mean_ksdi,mean_kste,max_kste,same_as_previous\n";
  for (const auto& row : r.rows)
    out += fmt(row.sigma) + "," + fmt(row.mean_ksdi) + "," + fmt(row.mean_kste) + "," + fmt(row.max_kste) + "," +
           (row.same_as_previous ? "1" : "0") + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_digest(const std::filesystem::path& path) { return fnv1a64_hex(read_file(path)); }

std::string Manifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = "motionorder";
  j["version"] = "1.0.0";
  j["command"] = command;
  j["seed"] = seed;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& [k, v] : parameters) params[k] = v;
  j["parameters"] = params;
  auto digests = [](const std::vector<std::filesystem::path>& files) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& f : files)
      arr.push_back({{"path", f.filename().string()}, {"fnv1a64", file_digest(f)}});
    return arr;
  };
  j["inputs"] = digests(inputs);
  j["outputs"] = digests(outputs);
  return j.dump(2) + "\n";
}

void Manifest::write(const std::filesystem::path& path) const { write_file(path, to_json()); }

// ---------------------------------------------------------------------------
// Plans and pipeline

ExperimentPlan ExperimentPlan::parse(const std::string& text, const std::filesystem::path& base_dir) {
  ExperimentPlan plan;
  const auto kv = KeyValueFile::parse(text);
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  for (const auto& e : kv.entries) {
    plan.raw[e.key] = e.value;
    const std::size_t line = e.line;
    if (e.key == "input") {
      plan.input = resolve(e.value);
    } else if (e.key == "generator") {
      if (e.value != "reynolds" && e.value != "flocking")
        throw ParseError("generator must be reynolds or flocking", static_cast<long>(line));
      plan.generator = e.value;
    } else if (e.key.rfind("gen.", 0) == 0) {
      plan.generator_config.set(e.key.substr(4), e.value, line);
    } else if (e.key == "normalize") {
      plan.normalize = parse_bool(e.value, e.key, line);
    } else if (e.key == "methods") {
      for (const auto& m : split(e.value, ','))
        if (!m.empty()) plan.methods.push_back(MethodSpec::parse(m));
    } else if (e.key == "k") {
      const auto k = parse_int(e.value, e.key, line);
      if (k < 1) throw ParseError("k must be at least 1", static_cast<long>(line));
      plan.neighbors.k = static_cast<std::size_t>(k);
    } else if (e.key == "output") {
      plan.output_dir = resolve(e.value);
    } else if (e.key == "seed") {
      plan.seed = parse_uint(e.value, e.key, line);
    } else if (e.key == "render") {
      plan.render = parse_bool(e.value, e.key, line);
    } else if (e.key == "sweep") {
      plan.sweep = parse_bool(e.value, e.key, line);
    } else if (e.key == "scale" || e.key == "strip_height" || e.key == "reference_frame") {
      const auto v = parse_int(e.value, e.key, line);
      if (v < (e.key == "reference_frame" ? 0 : 1)) throw ParseError(e.key + " is out of range", static_cast<long>(line));
      (e.key == "scale" ? plan.scale : e.key == "strip_height" ? plan.strip_height : plan.reference_frame) =
          static_cast<std::size_t>(v);
    } else if (e.key == "cap_ksdi") {
      plan.cap_ksdi = parse_double(e.value, e.key, line);
    } else if (e.key == "cap_kste") {
      plan.cap_kste = parse_double(e.value, e.key, line);
    } else if (e.key == "color_mode") {
      plan.color_mode = parse_color_mode(e.value);
    } else {
      throw ParseError("unknown plan setting '" + e.key + "'", static_cast<long>(line));
    }
  }
  if (!kv.find("gen.seed") && !plan.input) plan.generator_config.seed = plan.seed;
  plan.validate();
  return plan;
}

ExperimentPlan ExperimentPlan::load(const std::filesystem::path& path) {
  return parse(read_file(path), path.parent_path());
}

void ExperimentPlan::validate() const {
  if (methods.empty()) throw ValidationError("the plan lists no methods");
  if (neighbors.k < 1) throw ValidationError("k must be at least 1");
  if (!(cap_ksdi > 0.0) || !(cap_kste > 0.0)) throw ValidationError("metric caps must be positive");
  if (scale < 1 || strip_height < 2) throw ValidationError("scale must be >= 1 and strip_height >= 2");
  for (const auto& m : methods)
    if (std::find(method_names().begin(), method_names().end(), m.name) == method_names().end())
      throw ValidationError("unknown method '" + m.name + "'");
  if (!input) generator_config.validate();
}

TrajectoryDataset load_plan_dataset(const ExperimentPlan& plan) {
  TrajectoryDataset ds = plan.input ? load_csv(*plan.input)
                         : plan.generator == "flocking" ? gen_flocking(plan.generator_config)
                                                        : gen_reynolds_clusters(plan.generator_config);
  return plan.normalize ? normalize(ds) : ds;
}

namespace {

std::string file_label(const std::string& label) {
  std::string s = label;
  for (char& c : s)
    if (c == ':' || c == '=' || c == '/' || c == ' ') c = '_';
  return s;
}

} // namespace

PipelineOutputs run_pipeline(const ExperimentPlan& plan, Exec exec, const std::optional<std::filesystem::path>& plan_path) {
  plan.validate();
  namespace fs = std::filesystem;
  fs::create_directories(plan.output_dir);
  PipelineOutputs out;
  auto emit = [&](const std::string& name, const std::string& contents) {
    const fs::path p = plan.output_dir / name;
    write_file(p, contents);
    out.files.push_back(p);
  };

  const TrajectoryDataset ds = load_plan_dataset(plan);
  if (!plan.input) emit("data.csv", format_csv(ds));

  out.comparison = run_comparison(ds, plan.methods, plan.neighbors, plan.seed, exec);
  emit("metrics.csv", format_metrics_csv(out.comparison));
  emit("summary.csv", format_summary_csv(out.comparison));
  emit("tradeoff.csv", format_tradeoff_csv(out.comparison));
  const fs::path runtime = plan.output_dir / "runtime.csv";
  write_file(runtime, format_runtime_csv(out.comparison));

  Colormap2D cm = Colormap2D::for_dataset(ds);
  cm.mode = plan.color_mode;
  cm.reference_frame = plan.reference_frame;
  const TextChunks meta = {{"Software", "motionorder"}, {"Colormap", cm.describe()}};
  const std::size_t T = ds.num_frames();

  for (const auto& row : out.comparison.rows) {
    if (!row.run) continue;
    const OrderingSummary& ord = row.run->ordering;
    const std::string base = file_label(row.method);
    const fs::path ord_path = plan.output_dir / ("ordering_" + base + ".csv");
    save_ordering_csv(ds, ord, ord_path);
    out.files.push_back(ord_path);
    if (ord.has_coords()) {
      const fs::path coords_path = plan.output_dir / ("coords_" + base + ".csv");
      save_coords_csv(ds, ord, coords_path);
      out.files.push_back(coords_path);
    }
    if (!plan.render) continue;
    auto png = [&](const std::string& name, const Image& img) {
      const fs::path p = plan.output_dir / name;
      write_png(img, p, meta);
      out.files.push_back(p);
    };
    png("rug_" + base + ".png", render_rug(ds, ord, cm, plan.scale, exec));
    for (const auto& s : row.metrics) {
      if (s.name == "KSdi")
        png("strip_ksdi_" + base + ".png",
            render_metric_strip(s.values, plan.cap_ksdi, plan.strip_height, T, plan.scale, kKsdiColor));
      if (s.name == "KSte" && !s.values.empty())
        png("strip_kste_" + base + ".png",
            render_metric_strip(s.values, plan.cap_kste, plan.strip_height, T, plan.scale, kKsteColor));
    }
    png("heat_ksdi_" + base + ".png",
        render_heat_rug(ord, ksdi_contribution_table(ds, ord, plan.neighbors, exec), plan.scale, kKsdiColor));
    png("heat_kste_" + base + ".png",
        render_heat_rug(ord, kste_contribution_table(ord, plan.neighbors, exec), plan.scale, kKsteColor));
    if (ord.has_coords()) {
      MotionLinesLayout layout;
      layout.column_width = std::max<std::size_t>(plan.scale, 1);
      layout.height = std::max<std::size_t>(ds.num_entities() * plan.scale * 2, 2 * layout.margin + 2);
      png("lines_" + base + ".png", render_motionlines(ds, ord, cm, layout));
    }
  }

  if (plan.sweep) emit("sweep.csv", format_sweep_csv(run_sweep(ds, default_sigma_grid(), plan.neighbors, exec)));

  Manifest manifest;
  manifest.command = "pipeline";
  manifest.parameters = plan.raw;
  manifest.seed = plan.seed;
  if (plan_path) manifest.inputs.push_back(*plan_path);
  if (plan.input) manifest.inputs.push_back(*plan.input);
  manifest.outputs = out.files;
  manifest.write(plan.output_dir / "manifest.json");
  return out;
}

} // namespace motionorder
