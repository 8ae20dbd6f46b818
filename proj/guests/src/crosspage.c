// Supervisor guest. Maps two virtual pages at 0x40000000; a 4-byte
// `addi a0, a0, imm` starts 2 bytes before the end of the first page. The
// guest calls it, remaps the second page onto a copy whose upper half
// encodes a different immediate, flushes that page and calls it again.
#include "rt.h"

#define PAGE 4096
#define PTE_V 0x1
#define PTE_R 0x2
#define PTE_W 0x4
#define PTE_X 0x8
#define PTE_A 0x40
#define PTE_D 0x80

static uint64_t root[512] __attribute__((aligned(PAGE)));
static uint64_t mid[512] __attribute__((aligned(PAGE)));
static uint64_t leaf[512] __attribute__((aligned(PAGE)));
static uint16_t code[3][PAGE / 2] __attribute__((aligned(PAGE)));

volatile uint64_t crosspage_first;
volatile uint64_t crosspage_second;

#define VBASE 0x40000000ull

static uint64_t pte(const void* p, uint64_t flags) { return (((uint64_t)p >> 12) << 10) | flags; }

typedef uint64_t (*fn_t)(uint64_t);

long guest_main(long hart) {
  if (hart != 0) return 0;
  // addi a0, a0, imm = imm << 20 | a0 << 15 | a0 << 7 | 0x13
  code[0][PAGE / 2 - 1] = 0x0513;
  code[1][0] = 0x0015;  // imm 1
  code[1][1] = 0x8082;  // c.jr ra
  code[2][0] = 0x0025;  // imm 2
  code[2][1] = 0x8082;

  root[2] = pte((void*)0x80000000ull, PTE_V | PTE_R | PTE_W | PTE_X | PTE_A | PTE_D);  // identity gigapage
  root[1] = pte(mid, PTE_V);
  mid[0] = pte(leaf, PTE_V);
  leaf[0] = pte(code[0], PTE_V | PTE_R | PTE_X | PTE_A);
  leaf[1] = pte(code[1], PTE_V | PTE_R | PTE_X | PTE_A);
  __asm__ volatile("sfence.vma" ::: "memory");
  write_csr(satp, (8ull << 60) | ((uint64_t)root >> 12));
  __asm__ volatile("sfence.vma" ::: "memory");

  fn_t f = (fn_t)(VBASE + PAGE - 2);
  crosspage_first = f(100);

  leaf[1] = pte(code[2], PTE_V | PTE_R | PTE_X | PTE_A);
  __asm__ volatile("sfence.vma %0, zero" ::"r"(VBASE + PAGE) : "memory");
  crosspage_second = f(100);

  put_str("crosspage ");
  put_dec(crosspage_first);
  put_str(" ");
  put_dec(crosspage_second);
  put_str("\n");
  return crosspage_first == 101 && crosspage_second == 102 ? 0 : 1;
}
