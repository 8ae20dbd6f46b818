// Test-and-set spinlock around a plain read-modify-write of a shared
// counter. Exits with 0 when no increment was lost.
#include "rt.h"

#define MAX_HARTS 16

volatile uint64_t spin_iters = 2000;
volatile uint64_t spin_counter;
volatile uint64_t spin_acquired[MAX_HARTS];
volatile uint64_t spin_done;
static volatile uint32_t lock;

static void acquire(void) {
  for (;;) {
    uint32_t old;
    __asm__ volatile("amoswap.w.aq %0, %1, (%2)" : "=r"(old) : "r"(1), "r"(&lock) : "memory");
    if (old == 0) return;
    while (lock) {
    }
  }
}

static void release(void) { __asm__ volatile("amoswap.w.rl zero, zero, (%0)" ::"r"(&lock) : "memory"); }

long guest_main(long hart) {
  const uint64_t iters = spin_iters;
  for (uint64_t i = 0; i < iters; ++i) {
    acquire();
    spin_counter = spin_counter + 1;
    spin_acquired[hart] = spin_acquired[hart] + 1;
    release();
  }
  if (hart != 0) {
    atomic_inc(&spin_done);
    return 0;
  }
  const int n = num_harts();
  wait_for(&spin_done, (uint64_t)n - 1);
  put_str("counter=");
  put_dec(spin_counter);
  put_str("\n");
  return spin_counter == iters * (uint64_t)n ? 0 : 1;
}
