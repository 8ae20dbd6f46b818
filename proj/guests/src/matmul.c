// Per-hart integer matrix multiply. Each hart fills its own A and B from
// an LCG seeded with its hart id, multiplies them `matmul_reps` times and
// publishes a checksum of C.
#include "rt.h"

#define N 24
#define MAX_HARTS 16

volatile uint64_t matmul_reps = 90;
volatile uint64_t matmul_sums[MAX_HARTS];
volatile uint64_t matmul_done;

static int64_t mats[MAX_HARTS][3][N][N];

static uint64_t lcg(uint64_t* s) {
  *s = *s * 6364136223846793005ull + 1442695040888963407ull;
  return *s >> 33;
}

long guest_main(long hart) {
  int64_t(*a)[N] = mats[hart][0];
  int64_t(*b)[N] = mats[hart][1];
  int64_t(*c)[N] = mats[hart][2];
  uint64_t seed = (uint64_t)hart + 1;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      a[i][j] = (int64_t)(lcg(&seed) % 201) - 100;
      b[i][j] = (int64_t)(lcg(&seed) % 201) - 100;
    }
  const uint64_t reps = matmul_reps;
  uint64_t sum = 0;
  for (uint64_t r = 0; r < reps; ++r) {
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        int64_t acc = (int64_t)r;
        for (int k = 0; k < N; ++k) acc += a[i][k] * b[k][j];
        c[i][j] = acc;
      }
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) sum = sum * 31 + (uint64_t)c[i][j];
  }
  matmul_sums[hart] = sum;
  if (hart != 0) {
    atomic_inc(&matmul_done);
    return 0;
  }
  wait_for(&matmul_done, (uint64_t)num_harts() - 1);
  return 0;
}
