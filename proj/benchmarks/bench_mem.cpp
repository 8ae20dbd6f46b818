#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "rvdbt/guest_memory.hpp"
#include "rvdbt/mem/l0.hpp"
#include "rvdbt/mem/memory_system.hpp"

using namespace rvdbt;

namespace {

constexpr uint64_t kBase = 0x80000000;

// Inline fast path: one L0 probe per access, all hits.
void BM_L0Hit(benchmark::State& state) {
  mem::L0DataCache l0(1024, 64);
  std::vector<uint8_t> backing(64 * 1024);
  for (uint64_t off = 0; off < backing.size(); off += 64)
    l0.fill(kBase + off, reinterpret_cast<uint64_t>(backing.data() + off));
  uint64_t va = kBase;
  for (auto _ : state) {
    benchmark::DoNotOptimize(l0.lookup_read(va));
    va = kBase + ((va + 72) & 0xffff);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_L0Hit);

// Slow path through the memory model. Addresses span 8 MiB, so the 64 KiB
// of L0 reach almost never hits. Argument is the memory model id.
void BM_ModelAccess(benchmark::State& state) {
  const auto model = *mem::memory_model_from_id(static_cast<unsigned>(state.range(0)));
  GuestMemory memory(kBase, 16 << 20);
  mem::MemorySystem ms(memory, 1);
  ms.configure(model, 64);
  const mem::TranslationRegime regime;
  std::mt19937_64 rng(1);
  for (auto _ : state) {
    const uint64_t va = kBase + (rng() % (8 << 20) & ~uint64_t(7));
    benchmark::DoNotOptimize(ms.data_access(0, va, mem::AccessKind::Read, regime));
  }
  state.SetLabel(std::string(mem::memory_model_name(model)));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ModelAccess)->DenseRange(0, 3);

}  // namespace
