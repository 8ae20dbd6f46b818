#include <spdlog/spdlog.h>

#include "rvdbt/csr.hpp"
#include "rvdbt/hart.hpp"
#include "rvdbt/machine.hpp"
#include "rvdbt/sys.hpp"

namespace rvdbt::sys {

namespace {

constexpr uint64_t kMisa = (2ull << 62) | (1u << 0) | (1u << 2) | (1u << 8) | (1u << 12) | (1u << 18) | (1u << 20);
constexpr uint64_t kMedelegMask = 0xb3ff;
constexpr uint64_t kMidelegMask = mip::kSupervisorBits;
constexpr uint64_t kMieMask = mip::kAll;
constexpr uint64_t kMipWritable = mip::kSsip | mip::kStip | mip::kSeip | mip::kMsip;
constexpr uint64_t kSstatusWritable = mstatus::kSie | mstatus::kSpie | mstatus::kSpp | mstatus::kSum | mstatus::kMxr;

bool hpm_counter(uint16_t a) { return (a >= 0xc03 && a <= 0xc1f); }
bool mhpm(uint16_t a) { return (a >= 0xb03 && a <= 0xb1f) || (a >= 0x323 && a <= 0x33f); }

bool counter_enabled(const Hart& h, unsigned bit) {
  if (h.priv == Privilege::Machine) return true;
  if (!((h.csr.mcounteren >> bit) & 1)) return false;
  if (h.priv == Privilege::User && !((h.csr.scounteren >> bit) & 1)) return false;
  return true;
}

void set_mip(Hart& h, uint64_t mask, uint64_t value) {
  uint64_t cur = h.mip.load();
  while (!h.mip.compare_exchange_weak(cur, (cur & ~mask) | (value & mask))) {
  }
}

void write_satp(Hart& h, uint64_t v) {
  const uint64_t mode = mem::satp::mode(v);
  if (mode != mem::satp::kModeBare && mode != mem::satp::kModeSv39) return;
  h.csr.satp = v;
  h.memsys.flush_translations(h.id());
  h.deferred |= deferred::kFlushCode;
  h.update_regimes();
}

void write_simctrl(Hart& h, uint64_t v) {
  Machine& m = h.machine;
  if (v & simctrl::kError) h.csr.simctrl_error = false;
  const unsigned pid = static_cast<unsigned>(v & simctrl::kPipelineMask);
  const unsigned mid = static_cast<unsigned>((v & simctrl::kMemoryMask) >> simctrl::kMemoryShift);
  RuntimeConfig next;
  const auto model = mem::memory_model_from_id(mid);
  next.line_size = (v & simctrl::kLineSize4K) ? 4096 : 64;
  next.mode = (v & simctrl::kParallel) ? ExecMode::Parallel : ExecMode::Lockstep;
  const char* why = nullptr;
  if (!pipeline::registry().name_of(pid))
    why = "unknown pipeline model";
  else if (!model)
    why = "unknown memory model";
  else if (!m.memsys().valid_combination(*model, next.line_size))
    why = "line size not supported by the memory model";
  else if (next.mode == ExecMode::Parallel && *model != mem::MemoryModel::Atomic)
    why = "parallel mode needs the atomic memory model";
  if (why) {
    h.csr.simctrl_error = true;
    spdlog::warn("core {}: SIMCTRL write 0x{:x} ignored: {}", h.id(), v, why);
    return;
  }
  next.memory = *model;
  if (pid != h.model_id) {
    h.set_model(pid, m.config().pipeline_params);
    h.deferred |= deferred::kFlushCode;
  }
  if (next == m.runtime())
    h.memsys.flush_l0(h.id());
  else
    m.request_rendezvous(next);
}

}  // namespace

uint64_t simctrl_value(const Hart& h) {
  const RuntimeConfig rt = h.machine.runtime();
  uint64_t v = h.model_id & simctrl::kPipelineMask;
  v |= (static_cast<uint64_t>(rt.memory) << simctrl::kMemoryShift) & simctrl::kMemoryMask;
  if (rt.line_size == 4096) v |= simctrl::kLineSize4K;
  if (rt.mode == ExecMode::Parallel) v |= simctrl::kParallel;
  if (h.csr.simctrl_error) v |= simctrl::kError;
  return v;
}

bool csr_read(Hart& h, uint16_t addr, uint64_t& v) {
  if (addr == csr::kSimctrl) {
    v = simctrl_value(h);
    return true;
  }
  if (h.priv < CsrAddress{addr}.min_privilege()) return false;
  const CsrState& c = h.csr;
  switch (addr) {
    case csr::kSstatus: v = c.mstatus & mstatus::kSstatusMask; return true;
    case csr::kSie: v = c.mie & c.mideleg; return true;
    case csr::kStvec: v = c.stvec; return true;
    case csr::kScounteren: v = c.scounteren; return true;
    case csr::kSscratch: v = c.sscratch; return true;
    case csr::kSepc: v = c.sepc; return true;
    case csr::kScause: v = c.scause; return true;
    case csr::kStval: v = c.stval; return true;
    case csr::kSip: v = h.mip.load() & c.mideleg; return true;
    case csr::kSatp:
      if (h.priv == Privilege::Supervisor && (c.mstatus & mstatus::kTvm)) return false;
      v = c.satp;
      return true;
    case csr::kMstatus: v = c.mstatus | mstatus::kUxl | mstatus::kSxl; return true;
    case csr::kMisa: v = kMisa; return true;
    case csr::kMedeleg: v = c.medeleg; return true;
    case csr::kMideleg: v = c.mideleg; return true;
    case csr::kMie: v = c.mie; return true;
    case csr::kMtvec: v = c.mtvec; return true;
    case csr::kMcounteren: v = c.mcounteren; return true;
    case csr::kMcountinhibit: v = c.mcountinhibit; return true;
    case csr::kMscratch: v = c.mscratch; return true;
    case csr::kMepc: v = c.mepc; return true;
    case csr::kMcause: v = c.mcause; return true;
    case csr::kMtval: v = c.mtval; return true;
    case csr::kMip: v = h.mip.load(); return true;
    case csr::kPmpcfg0: v = c.pmpcfg0; return true;
    case csr::kPmpaddr0: v = c.pmpaddr0; return true;
    case csr::kMcycle: v = h.mcycle(); return true;
    case csr::kMinstret: v = h.instret(); return true;
    case csr::kCycle:
      if (!counter_enabled(h, 0)) return false;
      v = h.mcycle();
      return true;
    case csr::kTime:
      if (!counter_enabled(h, 1)) return false;
      v = h.machine.time(h);
      return true;
    case csr::kInstret:
      if (!counter_enabled(h, 2)) return false;
      v = h.instret();
      return true;
    case csr::kMvendorid:
    case csr::kMarchid:
    case csr::kMimpid: v = 0; return true;
    case csr::kMhartid: v = h.id(); return true;
    default:
      if (hpm_counter(addr)) {
        if (!counter_enabled(h, addr - csr::kCycle)) return false;
        v = 0;
        return true;
      }
      if (mhpm(addr)) {
        v = 0;
        return true;
      }
      return false;
  }
}

bool csr_write(Hart& h, uint16_t addr, uint64_t v) {
  if (addr == csr::kSimctrl) {
    write_simctrl(h, v);
    return true;
  }
  if (h.priv < CsrAddress{addr}.min_privilege()) return false;
  CsrState& c = h.csr;
  switch (addr) {
    case csr::kSstatus:
      c.mstatus = (c.mstatus & ~kSstatusWritable) | (v & kSstatusWritable);
      h.update_regimes();
      return true;
    case csr::kSie: c.mie = (c.mie & ~c.mideleg) | (v & c.mideleg); return true;
    case csr::kStvec: c.stvec = v & ~uint64_t(2); return true;
    case csr::kScounteren: c.scounteren = v & 0xffffffff; return true;
    case csr::kSscratch: c.sscratch = v; return true;
    case csr::kSepc: c.sepc = v & ~uint64_t(1); return true;
    case csr::kScause: c.scause = v; return true;
    case csr::kStval: c.stval = v; return true;
    case csr::kSip: set_mip(h, mip::kSsip & c.mideleg, v); return true;
    case csr::kSatp:
      if (h.priv == Privilege::Supervisor && (c.mstatus & mstatus::kTvm)) return false;
      write_satp(h, v);
      return true;
    case csr::kMstatus: {
      uint64_t next = (c.mstatus & ~mstatus::kWritableM) | (v & mstatus::kWritableM);
      // MPP is WARL; the reserved encoding 2 reads back as U.
      if (((next & mstatus::kMpp) >> mstatus::kMppShift) == 2) next &= ~mstatus::kMpp;
      c.mstatus = next;
      h.update_regimes();
      return true;
    }
    case csr::kMisa: return true;
    case csr::kMedeleg: c.medeleg = v & kMedelegMask; return true;
    case csr::kMideleg: c.mideleg = v & kMidelegMask; return true;
    case csr::kMie: c.mie = v & kMieMask; return true;
    case csr::kMtvec: c.mtvec = v & ~uint64_t(2); return true;
    case csr::kMcounteren: c.mcounteren = v & 0xffffffff; return true;
    case csr::kMcountinhibit: c.mcountinhibit = v & 0xffffffff; return true;
    case csr::kMscratch: c.mscratch = v; return true;
    case csr::kMepc: c.mepc = v & ~uint64_t(1); return true;
    case csr::kMcause: c.mcause = v; return true;
    case csr::kMtval: c.mtval = v; return true;
    case csr::kMip: set_mip(h, kMipWritable, v); return true;
    case csr::kPmpcfg0: c.pmpcfg0 = v; return true;
    case csr::kPmpaddr0: c.pmpaddr0 = v & ((1ull << 54) - 1); return true;
    case csr::kMcycle:
      c.mcycle_adjust = static_cast<int64_t>(v - (h.ctx.local_clock + h.ctx.pending_cycles));
      return true;
    case csr::kMinstret:
      // The writing instruction retires afterwards; that retirement is not counted.
      c.minstret_adjust = static_cast<int64_t>(v - (h.minstret + 1));
      return true;
    default:
      return mhpm(addr);
  }
}

}  // namespace rvdbt::sys
