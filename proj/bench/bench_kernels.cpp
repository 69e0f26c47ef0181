// Serial vs OpenMP timings of the heavier kernels. Arg(0) = serial, Arg(1) = parallel.

#include "motionorder/cluster.hpp"
#include "motionorder/datagen.hpp"
#include "motionorder/dimred.hpp"
#include "motionorder/metrics.hpp"
#include "motionorder/render.hpp"
#include "motionorder/spatial.hpp"

#include <benchmark/benchmark.h>

using namespace motionorder;

namespace {

const TrajectoryDataset& dataset() {
  static const TrajectoryDataset ds = [] {
    BoidsConfig cfg;
    cfg.frames = 200;
    cfg.seed = 3;
    return gen_reynolds_clusters(cfg);
  }();
  return ds;
}

Exec mode(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::parallel; }

void BM_Hilbert(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(hilbert_order(dataset(), GridDiscretization{}, mode(state)));
}

void BM_Spc(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(spc_order(dataset(), {0.5}, mode(state)));
}

void BM_Cpc(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(cpc_order(dataset(), {{0.5}, 2.0}, mode(state)));
}

void BM_Clc(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(clc_order(dataset(), mode(state)));
}

void BM_Evaluate(benchmark::State& state) {
  const auto ord = spc_order(dataset(), {0.5});
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(dataset(), ord, {}, mode(state)));
}

void BM_Sammon(benchmark::State& state) {
  SammonConfig cfg;
  cfg.iterations = 50;
  const auto ds = dataset().slice(0, 20);
  for (auto _ : state) benchmark::DoNotOptimize(sammon_embed(ds, cfg, mode(state)));
}

void BM_Tsne(benchmark::State& state) {
  TsneConfig cfg;
  cfg.iterations = 50;
  const auto ds = dataset().slice(0, 20);
  for (auto _ : state) benchmark::DoNotOptimize(tsne_embed(ds, cfg, mode(state)));
}

void BM_Rug(benchmark::State& state) {
  const auto ord = spc_order(dataset(), {0.5});
  const auto cm = Colormap2D::for_dataset(dataset());
  for (auto _ : state) benchmark::DoNotOptimize(render_rug(dataset(), ord, cm, 2, mode(state)));
}

} // namespace

BENCHMARK(BM_Hilbert)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Spc)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Cpc)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Clc)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Evaluate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sammon)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Tsne)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Rug)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  dataset(); // generate outside the timed region
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
