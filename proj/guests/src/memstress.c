// Random loads, stores and AMOs from every hart over a shared region
// larger than the L1, with part of the traffic aimed at a few contended
// lines and some misaligned accesses that cross lines and pages.
#include "rt.h"

#define MAX_HARTS 16
#define REGION (512u << 10)

volatile uint64_t stress_ops = 100000;
volatile uint64_t stress_done;
volatile uint64_t stress_sums[MAX_HARTS];
static uint8_t region[REGION] __attribute__((aligned(4096)));

long guest_main(long hart) {
  uint64_t s = 0x9e3779b97f4a7c15ull * (uint64_t)(hart + 1);
  uint64_t sum = 0;
  const uint64_t ops = stress_ops;
  for (uint64_t i = 0; i < ops; ++i) {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    const unsigned kind = s & 15;
    uint64_t off = (s >> 8) % REGION;
    if (kind < 3) off &= 0x1ff;  // contended lines
    if (kind == 15) {
      // misaligned, possibly crossing a line or page
      off = ((s >> 8) % (REGION / 4096 - 1)) * 4096 + 4093;
      volatile uint32_t* p = (volatile uint32_t*)(region + off);
      *p = *p + 1;
      continue;
    }
    off &= ~7ull;
    volatile uint64_t* p = (volatile uint64_t*)(region + off);
    if (kind < 6)
      sum += *p;
    else if (kind < 11)
      *p = s;
    else
      __atomic_fetch_add(p, 1, __ATOMIC_RELAXED);
  }
  stress_sums[hart] = sum;
  if (hart != 0) {
    atomic_inc(&stress_done);
    return 0;
  }
  wait_for(&stress_done, (uint64_t)num_harts() - 1);
  return 0;
}
