// Region-of-interest switch. Every hart does private work under the
// configuration the run starts with and reports in; the secondaries then
// spin on `roi_go`. Hart 0 selects in-order pipelines, MESI and lockstep
// once all have reported, releases the others and all harts run a
// contended shared-counter phase.
#include "rt.h"

#define MAX_HARTS 16
#define N 256

volatile uint64_t roi_done;
volatile uint64_t roi_go;
volatile uint64_t roi_private[MAX_HARTS];
volatile uint64_t roi_shared;
volatile uint64_t roi_iters = 300;
volatile uint64_t roi_finished;
static uint64_t scratch[MAX_HARTS][N];
static volatile uint32_t lock;

static void private_work(long hart) {
  uint64_t s = (uint64_t)hart * 977 + 1;
  for (int r = 0; r < 40; ++r)
    for (int i = 0; i < N; ++i) {
      s = s * 6364136223846793005ull + 1442695040888963407ull;
      scratch[hart][i] += s >> 40;
    }
  uint64_t sum = 0;
  for (int i = 0; i < N; ++i) sum ^= scratch[hart][i] + (uint64_t)i;
  roi_private[hart] = sum;
}

static void shared_work(long hart) {
  const uint64_t iters = roi_iters;
  for (uint64_t i = 0; i < iters; ++i) {
    uint32_t old;
    do {
      __asm__ volatile("amoswap.w.aq %0, %1, (%2)" : "=r"(old) : "r"(1), "r"(&lock) : "memory");
    } while (old);
    roi_shared = roi_shared + (uint64_t)hart + 1;
    __asm__ volatile("amoswap.w.rl zero, zero, (%0)" ::"r"(&lock) : "memory");
  }
}

long guest_main(long hart) {
  private_work(hart);
  const int n = num_harts();
  if (hart != 0) {
    atomic_inc(&roi_done);
    while (roi_go == 0) {
    }
    simctrl_write(SIMCTRL(PIPE_INORDER, MEM_MESI, 0, 0));
    shared_work(hart);
    atomic_inc(&roi_finished);
    return 0;
  }
  while (roi_done != (uint64_t)n - 1) {
  }
  simctrl_write(SIMCTRL(PIPE_INORDER, MEM_MESI, 0, 0));
  roi_go = 1;
  shared_work(hart);
  wait_for(&roi_finished, (uint64_t)n - 1);
  uint64_t expect = 0;
  for (int h = 0; h < n; ++h) expect += roi_iters * (uint64_t)(h + 1);
  return roi_shared == expect ? 0 : 1;
}
