#include <spdlog/spdlog.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <mutex>
#include <vector>

#include "guest_access.hpp"
#include "rvdbt/hart.hpp"
#include "rvdbt/machine.hpp"
#include "rvdbt/sys.hpp"

namespace rvdbt::sys {

namespace {

constexpr int64_t kEBADF = 9;
constexpr int64_t kEAGAIN = 11;
constexpr int64_t kENOMEM = 12;
constexpr int64_t kEFAULT = 14;
constexpr int64_t kEINVAL = 22;
constexpr int64_t kENOTTY = 25;
constexpr int64_t kENOSYS = 38;

constexpr uint64_t kPid = 1000;
constexpr uint64_t kPage = 4096;

constexpr uint64_t kFutexWait = 0;
constexpr uint64_t kFutexWake = 1;
constexpr uint64_t kFutexWaitBitset = 9;
constexpr uint64_t kFutexWakeBitset = 10;

constexpr uint64_t kCloneVm = 0x100;
constexpr uint64_t kCloneThread = 0x10000;
constexpr uint64_t kCloneSettls = 0x80000;
constexpr uint64_t kCloneParentSettid = 0x100000;
constexpr uint64_t kCloneChildCleartid = 0x200000;
constexpr uint64_t kCloneChildSettid = 0x1000000;

constexpr uint64_t kMapFixed = 0x10;
constexpr uint64_t kMapAnonymous = 0x20;

uint64_t tid_of(const Hart& h) { return kPid + h.id(); }
uint64_t page_up(uint64_t v) { return (v + kPage - 1) & ~(kPage - 1); }

int64_t write_out(Hart& h, uint64_t fd, uint64_t buf, uint64_t len) {
  if (fd != 1 && fd != 2) return -kEBADF;
  std::vector<char> tmp(len);
  if (!copy_from_guest(h, buf, tmp.data(), len)) return -kEFAULT;
  for (char c : tmp) h.machine.console_put(c);
  return static_cast<int64_t>(len);
}

int64_t futex_wake(Machine& m, uint64_t addr, uint64_t count) {
  int64_t woken = 0;
  for (unsigned i = 0; i < m.cores() && static_cast<uint64_t>(woken) < count; ++i) {
    Hart& t = m.hart(i);
    if (t.wait.load() == WaitState::Futex && t.futex_addr == addr) {
      t.wait.store(WaitState::None);
      m.notify(t);
      ++woken;
    }
  }
  return woken;
}

int64_t futex(Hart& h, const std::array<uint64_t, 6>& a) {
  Machine& m = h.machine;
  const uint64_t op = a[1] & 0x7f;
  std::lock_guard lock(m.futex_mutex());
  if (op == kFutexWait || op == kFutexWaitBitset) {
    uint32_t cur;
    if (!copy_from_guest(h, a[0], &cur, sizeof cur)) return -kEFAULT;
    if (cur != static_cast<uint32_t>(a[2])) return -kEAGAIN;
    h.futex_addr = a[0];
    ++h.stats.futex_waits;
    h.wait.store(WaitState::Futex);
    return 0;
  }
  if (op == kFutexWake || op == kFutexWakeBitset) return futex_wake(m, a[0], a[2]);
  return -kENOSYS;
}

void thread_exit(Hart& h, int code) {
  Machine& m = h.machine;
  UserProcess& p = m.process();
  if (h.clear_child_tid) {
    const uint32_t zero = 0;
    copy_to_guest(h, h.clear_child_tid, &zero, sizeof zero);
    std::lock_guard lock(m.futex_mutex());
    futex_wake(m, h.clear_child_tid, 1);
  }
  h.wait.store(WaitState::Stopped);
  p.last_exit_code = code;
  if (--p.running_threads <= 0) m.stop(code, StopReason::Exit, "last thread exited");
}

int64_t clone(Hart& h, const std::array<uint64_t, 6>& a, uint64_t pc) {
  Machine& m = h.machine;
  const uint64_t flags = a[0];
  if ((flags & (kCloneVm | kCloneThread)) != (kCloneVm | kCloneThread)) return -kEINVAL;
  Hart* child = nullptr;
  for (unsigned i = 0; i < m.cores() && !child; ++i)
    if (&m.hart(i) != &h && m.hart(i).wait.load() == WaitState::Stopped) child = &m.hart(i);
  if (!child) {
    spdlog::warn("core {}: clone failed, no free core", h.id());
    return -kEAGAIN;
  }
  Hart& c = *child;
  const uint64_t tid = tid_of(c);
  std::copy(std::begin(h.x), std::end(h.x), std::begin(c.x));
  c.x[10] = 0;
  if (a[1]) c.x[2] = a[1];
  if (flags & kCloneSettls) c.x[4] = a[3];
  c.pc = pc + 4;
  c.priv = h.priv;
  c.csr = h.csr;
  c.update_regimes();
  c.clear_child_tid = (flags & kCloneChildCleartid) ? a[4] : 0;
  c.entered_taken = true;
  const uint32_t tid32 = static_cast<uint32_t>(tid);
  if (flags & kCloneParentSettid) copy_to_guest(h, a[2], &tid32, sizeof tid32);
  if (flags & kCloneChildSettid) copy_to_guest(h, a[4], &tid32, sizeof tid32);
  // The child starts no earlier than the parent's present.
  const uint64_t now = h.ctx.local_clock + h.ctx.pending_cycles;
  if (c.ctx.local_clock < now) c.ctx.local_clock = now;
  ++m.process().running_threads;
  c.wait.store(WaitState::None);
  m.notify(c);
  return static_cast<int64_t>(tid);
}

int64_t mmap(Hart& h, const std::array<uint64_t, 6>& a) {
  UserProcess& p = h.machine.process();
  const uint64_t len = page_up(a[1]);
  const uint64_t flags = a[3];
  if (!(flags & kMapAnonymous) || len == 0) return -kEINVAL;
  if (flags & kMapFixed) {
    if (a[0] & (kPage - 1)) return -kEINVAL;
    if (!fill_guest(h, a[0], 0, len)) return -kENOMEM;
    return static_cast<int64_t>(a[0]);
  }
  if (p.mmap_top < len || p.mmap_top - len < p.brk) return -kENOMEM;
  p.mmap_top -= len;
  fill_guest(h, p.mmap_top, 0, len);
  return static_cast<int64_t>(p.mmap_top);
}

int64_t brk(Hart& h, uint64_t want) {
  UserProcess& p = h.machine.process();
  if (want < p.brk_base || want > p.mmap_top) return static_cast<int64_t>(p.brk);
  if (want > p.brk) fill_guest(h, p.brk, 0, want - p.brk);
  p.brk = want;
  return static_cast<int64_t>(p.brk);
}

}  // namespace

int64_t syscall_emulate(Hart& h, uint64_t number, const std::array<uint64_t, 6>& a, uint64_t pc) {
  Machine& m = h.machine;
  switch (number) {
    case nr::kWrite:
      return write_out(h, a[0], a[1], a[2]);
    case nr::kWritev: {
      int64_t total = 0;
      for (uint64_t i = 0; i < a[2]; ++i) {
        uint64_t iov[2];
        if (!copy_from_guest(h, a[1] + 16 * i, iov, sizeof iov)) return -kEFAULT;
        const int64_t r = write_out(h, a[0], iov[0], iov[1]);
        if (r < 0) return r;
        total += r;
      }
      return total;
    }
    case nr::kRead: {
      if (a[0] != 0) return -kEBADF;
      std::vector<char> tmp(a[2]);
      const ssize_t n = ::read(0, tmp.data(), tmp.size());
      if (n < 0) return -kEINVAL;
      if (!copy_to_guest(h, a[1], tmp.data(), static_cast<size_t>(n))) return -kEFAULT;
      return n;
    }
    case nr::kClose:
      return 0;
    case nr::kIoctl:
      return -kENOTTY;
    case nr::kFstat: {
      if (a[0] > 2) return -kEBADF;
      uint8_t st[128] = {};
      const uint32_t mode = 0020620;  // character device, rw--w----
      std::memcpy(st + 16, &mode, sizeof mode);
      if (!copy_to_guest(h, a[1], st, sizeof st)) return -kEFAULT;
      return 0;
    }
    case nr::kExit:
      thread_exit(h, static_cast<int>(a[0]));
      return 0;
    case nr::kExitGroup:
      m.process().last_exit_code = static_cast<int>(a[0]);
      m.stop(static_cast<int>(a[0]), StopReason::Exit, "exit_group");
      return 0;
    case nr::kSetTidAddress:
      h.clear_child_tid = a[0];
      return static_cast<int64_t>(tid_of(h));
    case nr::kFutex:
      return futex(h, a);
    case nr::kClockGettime: {
      const uint64_t cycles = h.ctx.local_clock + h.ctx.pending_cycles;
      const uint64_t hz = m.config().frequency_hz;
      const uint64_t ts[2] = {cycles / hz, static_cast<uint64_t>((unsigned __int128)(cycles % hz) * 1'000'000'000 / hz)};
      if (!copy_to_guest(h, a[1], ts, sizeof ts)) return -kEFAULT;
      return 0;
    }
    case nr::kSchedYield:
      return 0;
    case nr::kGetpid:
      return static_cast<int64_t>(kPid);
    case nr::kGettid:
      return static_cast<int64_t>(tid_of(h));
    case nr::kBrk:
      return brk(h, a[0]);
    case nr::kMmap:
      return mmap(h, a);
    case nr::kMunmap:
      return 0;
    case nr::kClone:
      return clone(h, a, pc);
    default:
      if (m.process().unknown_syscalls.insert(number).second)
        spdlog::warn("core {}: unsupported syscall {} returns ENOSYS", h.id(), number);
      return -kENOSYS;
  }
}

}  // namespace rvdbt::sys
