#include <benchmark/benchmark.h>

#include "okv/workload/deployment.hpp"
#include "okv/workload/runner.hpp"

namespace {

using namespace okv;

// One epoch of a saturated uniform workload per iteration. Arg 0 is the
// read batch size, arg 1 the simulated storage latency in microseconds.
void epoch_bench(benchmark::State& state, ExecMode mode) {
  DeploymentOptions o;
  o.proxy.geometry = {6, 4, 6, 3, 128};
  o.proxy.epoch = {2, static_cast<std::uint32_t>(state.range(0)), 16, 1};
  o.proxy.mode = mode;
  o.latency = std::chrono::microseconds(state.range(1));
  Deployment d(o);
  d.restart();

  WorkloadSpec w;
  w.key_space = 128;
  w.txns = 1'000'000'000;
  w.sessions = 16;
  std::uint64_t committed = 0;
  for (auto _ : state) {
    RunOptions ro;
    ro.max_ticks = o.proxy.epoch.ticks_per_epoch();
    w.seed++;
    committed += Runner(d, w).run(ro).committed;
  }
  const auto per_epoch =
      o.proxy.epoch.read_batches * o.proxy.epoch.read_batch_size + o.proxy.epoch.write_batch_size;
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * per_epoch));
  state.counters["committed/epoch"] =
      static_cast<double>(committed) / static_cast<double>(state.iterations());
}

void BM_Sequential(benchmark::State& s) { epoch_bench(s, ExecMode::kSequential); }
void BM_Parallel(benchmark::State& s) { epoch_bench(s, ExecMode::kParallel); }

BENCHMARK(BM_Sequential)->Args({16, 0})->Args({64, 0})->Args({64, 1000})->UseRealTime()
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Parallel)->Args({16, 0})->Args({64, 0})->Args({64, 1000})->UseRealTime()
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
