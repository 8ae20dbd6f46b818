// Pointer chase over a working set of `memlat_ws` bytes, one pointer per
// 64-byte line in a random cyclic order. The chain is built under the
// atomic memory model; the guest then selects the cache model, which
// starts the region of interest, warms up with one pass and times
// `memlat_accesses` dependent loads.
#include "rt.h"

#define LINE 64
#define MAX_BYTES (1u << 20)

volatile uint64_t memlat_ws = 16384;
volatile uint64_t memlat_accesses = 400000;
volatile uint64_t memlat_cycles;
volatile uint64_t memlat_sink;
volatile uint64_t memlat_memory = MEM_CACHE;

static uint8_t buf[MAX_BYTES] __attribute__((aligned(4096)));
static uint32_t order[MAX_BYTES / LINE];

long guest_main(long hart) {
  if (hart != 0) return 0;
  const uint64_t lines = memlat_ws / LINE;
  for (uint64_t i = 0; i < lines; ++i) order[i] = (uint32_t)i;
  uint64_t s = 12345;
  for (uint64_t i = lines - 1; i > 0; --i) {
    s = s * 6364136223846793005ull + 1442695040888963407ull;
    const uint64_t j = (s >> 33) % (i + 1);
    const uint32_t t = order[i];
    order[i] = order[j];
    order[j] = t;
  }
  for (uint64_t i = 0; i < lines; ++i)
    *(uint8_t**)(buf + order[i] * LINE) = buf + order[(i + 1) % lines] * LINE;

  simctrl_write(SIMCTRL(PIPE_SIMPLE, memlat_memory, 0, 0));

  uint8_t* p = buf + order[0] * LINE;
  for (uint64_t i = 0; i < lines; ++i) p = *(uint8_t**)p;
  const uint64_t n = memlat_accesses;
  const uint64_t t0 = read_csr(mcycle);
  for (uint64_t i = 0; i < n; ++i) p = *(uint8_t* volatile*)p;
  const uint64_t t1 = read_csr(mcycle);
  memlat_cycles = t1 - t0;
  memlat_sink = (uint64_t)p;
  return 0;
}
