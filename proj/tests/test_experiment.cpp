#include "doctest.h"
#include "helpers.hpp"

#include "motionorder/dimred.hpp"
#include "motionorder/experiment.hpp"
#include "motionorder/keyvalue.hpp"

#include "json.hpp"

#include <cmath>

using namespace motionorder;
namespace fs = std::filesystem;

namespace {

// Dataset that is strongly stretched along x in every frame.
TrajectoryDataset stretched_dataset() {
  std::mt19937_64 rng(401);
  std::normal_distribution<double> jitter(0.0, 0.05);
  std::vector<std::vector<Vec2>> frames;
  for (int t = 0; t < 12; ++t) {
    std::vector<Vec2> f;
    for (int i = 0; i < 20; ++i) f.push_back({static_cast<double>(i) + jitter(rng), 0.01 * t + jitter(rng)});
    frames.push_back(f);
  }
  return testing::dataset_from_frames(frames);
}

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename() != "runtime.csv") out[e.path().filename().string()] = read_file(e.path());
  return out;
}

} // namespace

TEST_SUITE("experiment") {

TEST_CASE("method specs parse and label canonically") {
  const auto m = MethodSpec::parse("cpc:sigma=0.5:cut=2");
  CHECK(m.name == "cpc");
  CHECK(m.params.at("sigma") == "0.5");
  CHECK(m.label() == "cpc:cut=2:sigma=0.5");
  CHECK(MethodSpec::parse("fxd").label() == "fxd");
  CHECK_THROWS_AS(MethodSpec::parse("spc:sigma"), ValidationError);
  CHECK(method_produces_coords("spc"));
  CHECK_FALSE(method_produces_coords("hil"));
}

TEST_CASE("run_method validates names and parameters") {
  const auto ds = testing::random_dataset(402, 10, 3);
  CHECK_THROWS_AS(run_method(ds, MethodSpec::parse("nope")), ValidationError);
  CHECK_THROWS_AS(run_method(ds, MethodSpec::parse("spc:sigma=2")), ValidationError);
  CHECK_THROWS_AS(run_method(ds, MethodSpec::parse("spc:width=2")), ValidationError);
  CHECK_THROWS_AS(run_method(ds, MethodSpec::parse("rtr:capacity=1")), ValidationError);
  for (const auto& name : method_names()) {
    MethodSpec spec = MethodSpec::parse(name);
    if (name == "sam" || name == "samp") spec.params["iterations"] = "10";
    if (name == "sne" || name == "snep") {
      spec.params["iterations"] = "10";
      spec.params["perplexity"] = "3";
    }
    const auto run = run_method(ds, spec);
    CHECK(run.ordering.num_frames() == 3);
    CHECK(run.ordering.has_coords() == method_produces_coords(name));
  }
}

TEST_CASE("fixed order comparison has zero jump and crossing rows") {
  const auto ds = testing::random_dataset(403, 15, 8);
  const auto r = run_comparison(ds, {MethodSpec::parse("fxd")});
  REQUIRE(r.rows.size() == 1);
  for (const auto& s : r.rows[0].metrics)
    if (s.name == "JMP" || s.name == "CRS") {
      CHECK(s.summary.mean == 0.0);
      CHECK(s.summary.max == 0.0);
    }
  CHECK(format_summary_csv(r).find("fxd,JMP,0,0,0,0,") != std::string::npos);
}

TEST_CASE("sigma one and per-frame pca give identical metric rows") {
  const auto ds = testing::random_dataset(404, 30, 10, 6.0);
  const auto r = run_comparison(ds, {MethodSpec::parse("spc:sigma=1"), MethodSpec::parse("pca")});
  REQUIRE(r.rows.size() == 2);
  for (std::size_t m = 0; m < 5; ++m) CHECK(r.rows[0].metrics[m].values == r.rows[1].metrics[m].values);
}

TEST_CASE("failing methods are recorded and the run continues") {
  const auto ds = testing::random_dataset(405, 5, 3);
  const auto r = run_comparison(ds, {MethodSpec::parse("sne:perplexity=40"), MethodSpec::parse("fxd")});
  CHECK_FALSE(r.rows[0].error.empty());
  CHECK_FALSE(r.rows[0].run.has_value());
  CHECK(r.rows[1].run.has_value());
  CHECK(format_tradeoff_csv(r).find("sne") == std::string::npos);
}

TEST_CASE("default sweep grid") {
  const auto g = default_sigma_grid();
  REQUIRE(g.size() == 101);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 1.0);
  CHECK(g[37] == 0.37);
}

TEST_CASE("sweep flags identical orderings exactly") {
  const auto ds = testing::random_dataset(406, 25, 15, 5.0);
  const auto grid = default_sigma_grid();
  const auto r = run_sweep(ds, grid);
  REQUIRE(r.rows.size() == 101);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const bool same = i > 0 && spc_order(ds, {grid[i]}).all_ranks() == spc_order(ds, {grid[i - 1]}).all_ranks();
    CHECK(r.rows[i].same_as_previous == same);
    if (same) CHECK(r.rows[i].mean_kste == r.rows[i - 1].mean_kste);
  }
  CHECK(r.low_cutoff <= r.high_cutoff);
  const std::string csv = format_sweep_csv(r);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 102);
  CHECK_THROWS_AS(run_sweep(ds, {0.5, 0.2}), ValidationError);
}

TEST_CASE("sweep below the lowest cut-off repeats the first row") {
  const auto ds = testing::random_dataset(407, 25, 15, 5.0);
  const auto tl = spc_timeline(ds, {1.0});
  double lowest = 1.0;
  for (std::size_t t = 1; t < ds.num_frames(); ++t) lowest = std::min(lowest, tl.v2[t] / tl.v1[t]);
  REQUIRE(lowest > 0.005);
  const auto r = run_sweep(ds, {0.0, 0.005});
  CHECK(r.rows[1].same_as_previous);
}

TEST_CASE("always-stretched data makes every positive sigma match sigma one") {
  const auto ds = stretched_dataset();
  const auto r = run_sweep(ds, default_sigma_grid());
  for (std::size_t i = 2; i < r.rows.size(); ++i) CHECK(r.rows[i].same_as_previous);
  CHECK(r.high_cutoff <= 0.01);
}

TEST_CASE("plan parsing") {
  const auto plan = ExperimentPlan::parse("methods = fxd, spc:sigma=0.5\nk = 5\noutput = res\nseed = 9\n"
                                          "gen.frames = 20\nscale = 2\ncolor_mode = reference\n",
                                          "/tmp/base");
  REQUIRE(plan.methods.size() == 2);
  CHECK(plan.methods[1].label() == "spc:sigma=0.5");
  CHECK(plan.neighbors.k == 5);
  CHECK(plan.output_dir == fs::path("/tmp/base/res"));
  CHECK(plan.seed == 9);
  CHECK(plan.generator_config.seed == 9);
  CHECK(plan.generator_config.frames == 20);
  CHECK(plan.scale == 2);
  CHECK(plan.color_mode == ColorMode::reference);
  CHECK_THROWS_AS(ExperimentPlan::parse("methods = fxd\nunknown = 1\n"), ParseError);
  CHECK_THROWS_AS(ExperimentPlan::parse("methods = fxd\nk = many\n"), ParseError);
}

TEST_CASE("manifest is deterministic and records digests") {
  const auto dir = testing::scratch_dir("manifest");
  write_file(dir / "a.txt", "hello");
  Manifest m;
  m.command = "test";
  m.parameters = {{"x", "1"}};
  m.seed = 3;
  m.inputs = {dir / "a.txt"};
  const auto j = nlohmann::json::parse(m.to_json());
  CHECK(m.to_json() == m.to_json());
  CHECK(j["inputs"][0]["fnv1a64"] == fnv1a64_hex("hello"));
  CHECK(fnv1a64_hex("") == "cbf29ce484222325");
  CHECK(fnv1a64_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("pipeline is byte-stable") {
  const auto dir = testing::scratch_dir("pipeline");
  write_file(dir / "plan.cfg",
             "methods = fxd, hil, spc:sigma=0.5, cpc:sigma=0.5\n"
             "gen.frames = 30\ngen.boids_per_cluster = 12\nseed = 4\nsweep = true\noutput = run1\n");
  auto plan = ExperimentPlan::load(dir / "plan.cfg");
  const auto first = run_pipeline(plan, Exec::parallel, dir / "plan.cfg");
  plan.output_dir = dir / "run2";
  run_pipeline(plan, Exec::serial, dir / "plan.cfg");
  const auto a = dir_contents(dir / "run1"), b = dir_contents(dir / "run2");
  CHECK(a == b);
  CHECK(a.count("rug_spc_sigma_0.5.png"));
  CHECK(a.count("lines_cpc_sigma_0.5.png"));
  CHECK_FALSE(a.count("lines_hil.png"));
  CHECK(a.count("sweep.csv"));
  CHECK(a.count("manifest.json"));
  CHECK(first.comparison.rows.size() == 4);
  const auto j = nlohmann::json::parse(a.at("manifest.json"));
  CHECK(j["outputs"].size() == first.files.size());
}

} // TEST_SUITE
