// Software and timer interrupts. Secondary harts enable MSIE and sleep in
// WFI until hart 0 sends them an IPI; each handler counts itself in. Hart
// 0 then arms its timer and sleeps until the timer interrupt arrives.
#include "rt.h"

#define MAX_HARTS 16

volatile uint64_t ipi_ready;
volatile uint64_t ipi_handled;
volatile uint64_t ipi_seen[MAX_HARTS];
volatile uint64_t timer_fired;
volatile uint64_t timer_at;

void trap_entry(void);
__asm__(
    "  .balign 4\n"
    "  .globl trap_entry\n"
    "trap_entry:\n"
    "  addi sp, sp, -128\n"
    "  sd ra, 0(sp)\n"
    "  sd a0, 8(sp)\n"
    "  sd a1, 16(sp)\n"
    "  sd a2, 24(sp)\n"
    "  sd a3, 32(sp)\n"
    "  sd a4, 40(sp)\n"
    "  sd a5, 48(sp)\n"
    "  sd a6, 56(sp)\n"
    "  sd a7, 64(sp)\n"
    "  sd t0, 72(sp)\n"
    "  sd t1, 80(sp)\n"
    "  sd t2, 88(sp)\n"
    "  call trap_handler\n"
    "  ld ra, 0(sp)\n"
    "  ld a0, 8(sp)\n"
    "  ld a1, 16(sp)\n"
    "  ld a2, 24(sp)\n"
    "  ld a3, 32(sp)\n"
    "  ld a4, 40(sp)\n"
    "  ld a5, 48(sp)\n"
    "  ld a6, 56(sp)\n"
    "  ld a7, 64(sp)\n"
    "  ld t0, 72(sp)\n"
    "  ld t1, 80(sp)\n"
    "  ld t2, 88(sp)\n"
    "  addi sp, sp, 128\n"
    "  mret\n");

void trap_handler(void) {
  const uint64_t cause = read_csr(mcause);
  const uint64_t hart = read_csr(mhartid);
  if (cause == ((1ull << 63) | 3)) {
    sbi_call(3, 0, 0, 0, 0);  // clear own IPI
    ipi_seen[hart] = ipi_seen[hart] + 1;
    atomic_inc(&ipi_handled);
  } else if (cause == ((1ull << 63) | 7)) {
    sbi_set_timer(~0ull);
    timer_fired = read_csr(time);
  } else {
    sbi_exit(100 + (long)cause);
  }
}

long guest_main(long hart) {
  write_csr(mtvec, (uint64_t)trap_entry);
  const int n = num_harts();
  if (hart != 0) {
    write_csr(mie, 1u << 3);
    __asm__ volatile("csrs mstatus, %0" ::"r"(8ull));
    atomic_inc(&ipi_ready);
    while (ipi_seen[hart] == 0) __asm__ volatile("wfi");
    return 0;
  }
  wait_for(&ipi_ready, (uint64_t)n - 1);
  for (int h = 1; h < n; ++h) sbi_send_ipi(1ul << h, 0);
  wait_for(&ipi_handled, (uint64_t)n - 1);

  write_csr(mie, 1u << 7);
  __asm__ volatile("csrs mstatus, %0" ::"r"(8ull));
  timer_at = read_csr(time) + 5000;
  sbi_set_timer(timer_at);
  while (timer_fired == 0) __asm__ volatile("wfi");
  put_str("ipi ok\n");
  return timer_fired >= timer_at ? 0 : 2;
}
