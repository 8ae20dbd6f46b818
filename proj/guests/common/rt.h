// Minimal freestanding runtime for machine and supervisor guests.
#pragma once

#include <stdint.h>

#define read_csr(reg)                                      \
  ({                                                       \
    uint64_t v_;                                           \
    __asm__ volatile("csrr %0, " #reg : "=r"(v_)::"memory"); \
    v_;                                                    \
  })
#define write_csr(reg, val) __asm__ volatile("csrw " #reg ", %0" ::"r"((uint64_t)(val)) : "memory")

#define PIPE_ATOMIC 0
#define PIPE_SIMPLE 1
#define PIPE_INORDER 2
#define MEM_ATOMIC 0
#define MEM_TLB 1
#define MEM_CACHE 2
#define MEM_MESI 3
#define SIMCTRL(pipe, mem, line4k, parallel) \
  ((uint64_t)(pipe) | ((uint64_t)(mem) << 4) | ((uint64_t)(line4k) << 8) | ((uint64_t)(parallel) << 9))

static inline void simctrl_write(uint64_t v) { __asm__ volatile("csrw 0x7c0, %0" ::"r"(v) : "memory"); }
static inline uint64_t simctrl_read(void) {
  uint64_t v;
  __asm__ volatile("csrr %0, 0x7c0" : "=r"(v)::"memory");
  return v;
}

struct sbiret {
  long error;
  long value;
};

static inline struct sbiret sbi_call(long ext, long fid, long arg0, long arg1, long arg2) {
  register long a0 __asm__("a0") = arg0;
  register long a1 __asm__("a1") = arg1;
  register long a2 __asm__("a2") = arg2;
  register long a6 __asm__("a6") = fid;
  register long a7 __asm__("a7") = ext;
  __asm__ volatile("ecall" : "+r"(a0), "+r"(a1) : "r"(a2), "r"(a6), "r"(a7) : "memory");
  return (struct sbiret){a0, a1};
}

#define SBI_EXT_TIME 0x54494d45
#define SBI_EXT_IPI 0x735049
#define SBI_EXT_HSM 0x48534d
#define SBI_EXT_SRST 0x53525354

static inline void sbi_putchar(int c) { sbi_call(1, 0, c, 0, 0); }

static inline __attribute__((noreturn)) void sbi_exit(long code) {
  sbi_call(SBI_EXT_SRST, 0, 0, code, 0);
  for (;;) {
  }
}

static inline void sbi_hart_stop(void) { sbi_call(SBI_EXT_HSM, 1, 0, 0, 0); }
static inline long sbi_hart_status(long hart) { return sbi_call(SBI_EXT_HSM, 2, hart, 0, 0).value; }
static inline long sbi_hart_start(long hart, uint64_t pc, long opaque) {
  return sbi_call(SBI_EXT_HSM, 0, hart, (long)pc, opaque).error;
}
static inline void sbi_set_timer(uint64_t when) { sbi_call(SBI_EXT_TIME, 0, (long)when, 0, 0); }
static inline void sbi_send_ipi(unsigned long mask, unsigned long base) { sbi_call(SBI_EXT_IPI, 0, mask, base, 0); }

static inline int num_harts(void) {
  int n = 0;
  while (n < 64 && sbi_call(SBI_EXT_HSM, 2, n, 0, 0).error == 0) ++n;
  return n;
}

static inline void put_str(const char* s) {
  while (*s) sbi_putchar(*s++);
}

static inline void put_dec(uint64_t v) {
  char buf[24];
  int i = 0;
  do {
    buf[i++] = (char)('0' + v % 10);
    v /= 10;
  } while (v);
  while (i) sbi_putchar(buf[--i]);
}

static inline void put_hex(uint64_t v) {
  put_str("0x");
  for (int i = 60; i >= 0; i -= 4) sbi_putchar("0123456789abcdef"[(v >> i) & 15]);
}

static inline uint64_t load_acquire(volatile uint64_t* p) { return __atomic_load_n(p, __ATOMIC_ACQUIRE); }
static inline void store_release(volatile uint64_t* p, uint64_t v) { __atomic_store_n(p, v, __ATOMIC_RELEASE); }
static inline uint64_t fetch_add(volatile uint64_t* p, uint64_t v) { return __atomic_fetch_add(p, v, __ATOMIC_ACQ_REL); }

// Increment without keeping the old value in a register.
static inline void atomic_inc(volatile uint64_t* p) {
  __asm__ volatile("amoadd.d.aqrl zero, %0, (%1)" ::"r"(1ull), "r"(p) : "memory");
}

static inline void wait_for(volatile uint64_t* p, uint64_t value) {
  while (load_acquire(p) < value) {
  }
}

// Called when guest_main returns: hart 0 ends the run, the others park.
long guest_main(long hart);
__attribute__((noreturn)) void guest_return(long code, long hart);
