// Linux user-mode guest: clone() threads that wait on a futex for a start
// signal, bump a shared counter and exit; the main thread joins them
// through the clear-child-tid futex.
#include <stdint.h>

#define MAX_THREADS 8
#define ITERS 1000

volatile uint64_t threads_wanted = 3;
volatile uint64_t counter;
volatile int32_t start_flag;
volatile int32_t child_tid[MAX_THREADS];
static uint8_t stacks[MAX_THREADS][16384] __attribute__((aligned(16)));

static long sys(long n, long a, long b, long c, long d, long e, long f) {
  register long a0 __asm__("a0") = a;
  register long a1 __asm__("a1") = b;
  register long a2 __asm__("a2") = c;
  register long a3 __asm__("a3") = d;
  register long a4 __asm__("a4") = e;
  register long a5 __asm__("a5") = f;
  register long a7 __asm__("a7") = n;
  __asm__ volatile("ecall" : "+r"(a0) : "r"(a1), "r"(a2), "r"(a3), "r"(a4), "r"(a5), "r"(a7) : "memory");
  return a0;
}

long spawn(void (*fn)(long), long arg, void* stack_top, volatile int32_t* ctid);
__asm__(
    "  .globl spawn\n"
    "spawn:\n"
    "  mv t0, a0\n"
    "  mv t1, a1\n"
    "  mv a4, a3\n"
    "  mv a1, a2\n"
    "  li a0, 0x250f00\n"
    "  li a2, 0\n"
    "  li a3, 0\n"
    "  li a7, 220\n"
    "  ecall\n"
    "  bnez a0, 1f\n"
    "  mv a0, t1\n"
    "  jalr t0\n"
    "  li a0, 0\n"
    "  li a7, 93\n"
    "  ecall\n"
    "1:\n"
    "  ret\n");

static void out(const char* s) {
  unsigned long n = 0;
  while (s[n]) ++n;
  sys(64, 1, (long)s, (long)n, 0, 0, 0);
}

static void worker(long id) {
  (void)id;
  while (start_flag == 0) sys(98, (long)&start_flag, 0x80, 0, 0, 0, 0);
  for (int i = 0; i < ITERS; ++i) __atomic_fetch_add(&counter, 1, __ATOMIC_RELAXED);
}

int main(void) {
  uint64_t n = threads_wanted;
  if (n > MAX_THREADS) n = MAX_THREADS;
  uint64_t started = 0;
  for (uint64_t t = 0; t < n; ++t) {
    child_tid[t] = 1;
    if (spawn(worker, (long)t, stacks[t] + sizeof stacks[t], &child_tid[t]) < 0) {
      child_tid[t] = 0;
      break;
    }
    ++started;
  }
  start_flag = 1;
  sys(98, (long)&start_flag, 0x81, 0x7fffffff, 0, 0, 0);
  for (uint64_t t = 0; t < started; ++t)
    while (child_tid[t] != 0) sys(98, (long)&child_tid[t], 0x80, child_tid[t], 0, 0, 0);
  out(counter == started * ITERS && started == n ? "threads ok\n" : "threads FAILED\n");
  return counter == started * ITERS && started == n ? 0 : 1;
}
