#include <benchmark/benchmark.h>

#include "rvdbt/sched.hpp"

namespace {

// Lockstep hand-off between fibers on one host thread.
void BM_FiberSwitch(benchmark::State& state) {
  const auto contexts = static_cast<unsigned>(state.range(0));
  double rate = 0;
  for (auto _ : state) rate = rvdbt::sched::measure_fiber_switch_rate(contexts, 200'000);
  state.counters["switches_per_s"] = rate;
}
BENCHMARK(BM_FiberSwitch)->Arg(2)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

// The same hand-off done with host threads and a barrier.
void BM_BarrierSync(benchmark::State& state) {
  const auto threads = static_cast<unsigned>(state.range(0));
  double rate = 0;
  for (auto _ : state) rate = rvdbt::sched::measure_barrier_sync_rate(threads, 5'000);
  state.counters["syncs_per_s"] = rate;
}
BENCHMARK(BM_BarrierSync)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
