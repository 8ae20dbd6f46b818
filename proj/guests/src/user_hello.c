// Linux user-mode guest: prints its arguments, exercises brk and mmap.
#include <stdint.h>

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

static unsigned long len(const char* s) {
  unsigned long n = 0;
  while (s[n]) ++n;
  return n;
}

static void out(const char* s) { sys(64, 1, (long)s, (long)len(s), 0, 0, 0); }

int main(int argc, char** argv) {
  out("hello from user mode\n");
  for (int i = 1; i < argc; ++i) {
    out(argv[i]);
    out("\n");
  }
  const long base = sys(214, 0, 0, 0, 0, 0, 0);
  const long top = sys(214, base + 8192, 0, 0, 0, 0, 0);
  if (top != base + 8192) return 3;
  volatile char* heap = (volatile char*)base;
  heap[8191] = 42;
  char* m = (char*)sys(222, 0, 65536, 3, 0x22, -1, 0);
  if ((long)m < 0) return 4;
  m[65535] = 7;
  if (m[0] != 0 || heap[8191] != 42) return 5;
  if (sys(172, 0, 0, 0, 0, 0, 0) != 1000) return 6;
  return argc == 1 ? 0 : argc;
}
