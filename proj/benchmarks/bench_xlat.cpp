#include <benchmark/benchmark.h>

#include "rvdbt/elf.hpp"
#include "rvdbt/machine.hpp"
#include "rvdbt/xlat.hpp"

using namespace rvdbt;

namespace {

const ElfImage& matmul() {
  static const ElfImage img = read_elf_file(std::string(RVDBT_GUEST_DIR) + "/matmul.elf");
  return img;
}

SimConfig config(unsigned cores, const std::string& pipeline, mem::MemoryModel memory) {
  SimConfig cfg;
  cfg.cores = cores;
  cfg.pipeline = {pipeline};
  cfg.memory = memory;
  cfg.echo_console = false;
  cfg.memory_size = 64ull << 20;
  return cfg;
}

// Translation of the guest entry block under each pipeline model.
void BM_TranslateEntry(benchmark::State& state) {
  static const char* const kNames[] = {"atomic", "simple", "inorder"};
  Machine m(config(1, kNames[state.range(0)], mem::MemoryModel::Atomic));
  m.load(matmul());
  Hart& h = m.hart(0);
  uint64_t insns = 0;
  for (auto _ : state) {
    auto b = xlat::translate(h, h.pc);
    insns += b->instructions;
    benchmark::DoNotOptimize(b);
  }
  state.SetLabel(kNames[state.range(0)]);
  state.counters["guest_insns_per_s"] = benchmark::Counter(double(insns), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_TranslateEntry)->DenseRange(0, 2);

// End-to-end run of matmul on one core; args are pipeline and memory model.
void BM_RunMatmul(benchmark::State& state) {
  static const char* const kNames[] = {"atomic", "simple", "inorder"};
  const auto model = *mem::memory_model_from_id(static_cast<unsigned>(state.range(1)));
  uint64_t insns = 0;
  for (auto _ : state) {
    state.PauseTiming();
    auto m = std::make_unique<Machine>(config(1, kNames[state.range(0)], model));
    m->load(matmul());
    m->memory().write<uint64_t>(*matmul().symbol("matmul_reps"), 3);
    state.ResumeTiming();
    m->run();
    insns += m->hart(0).minstret;
  }
  state.SetLabel(std::string(kNames[state.range(0)]) + "/" + std::string(mem::memory_model_name(model)));
  state.counters["MIPS"] = benchmark::Counter(double(insns) / 1e6, benchmark::Counter::kIsRate);
}
BENCHMARK(BM_RunMatmul)->ArgsProduct({{0, 1, 2}, {0, 1, 2, 3}})->Unit(benchmark::kMillisecond);

}  // namespace
