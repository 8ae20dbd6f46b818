#include <string>

#include "rvdbt/csr.hpp"
#include "rvdbt/hart.hpp"
#include "rvdbt/machine.hpp"
#include "rvdbt/sys.hpp"

namespace rvdbt::sys {

std::string_view target_name(EmulationTarget t) {
  switch (t) {
    case EmulationTarget::User: return "user";
    case EmulationTarget::Supervisor: return "supervisor";
    case EmulationTarget::Machine: return "machine";
  }
  return "?";
}

std::optional<EmulationTarget> target_from_name(std::string_view name) {
  if (name == "user") return EmulationTarget::User;
  if (name == "supervisor") return EmulationTarget::Supervisor;
  if (name == "machine") return EmulationTarget::Machine;
  return std::nullopt;
}

void take_trap(Hart& h, const ExceptionCause& cause, uint64_t epc) {
  ++h.stats.traps;
  h.recent_causes[h.recent_cause_pos++ % h.recent_causes.size()] = cause.code;
  if (++h.consecutive_traps > h.machine.config().trap_storm_limit) {
    h.pc = epc;
    h.machine.fail(h, "trap storm: " + std::to_string(h.consecutive_traps) + " traps without retiring an instruction");
    return;
  }
  CsrState& c = h.csr;
  const bool irq = cause.is_interrupt();
  const uint64_t code = cause.code & ~kInterruptBit;
  const uint64_t deleg = irq ? c.mideleg : c.medeleg;
  const bool to_s = h.priv <= Privilege::Supervisor && code < 64 && ((deleg >> code) & 1);
  if (to_s) {
    c.sepc = epc;
    c.scause = cause.code;
    c.stval = cause.tval;
    uint64_t s = c.mstatus & ~(mstatus::kSpie | mstatus::kSie | mstatus::kSpp);
    if (c.mstatus & mstatus::kSie) s |= mstatus::kSpie;
    if (h.priv == Privilege::Supervisor) s |= mstatus::kSpp;
    c.mstatus = s;
    h.priv = Privilege::Supervisor;
    h.pc = (c.stvec & ~uint64_t(3)) + ((c.stvec & 1) && irq ? 4 * code : 0);
  } else {
    c.mepc = epc;
    c.mcause = cause.code;
    c.mtval = cause.tval;
    uint64_t s = c.mstatus & ~(mstatus::kMpie | mstatus::kMie | mstatus::kMpp);
    if (c.mstatus & mstatus::kMie) s |= mstatus::kMpie;
    s |= static_cast<uint64_t>(h.priv) << mstatus::kMppShift;
    c.mstatus = s;
    h.priv = Privilege::Machine;
    h.pc = (c.mtvec & ~uint64_t(3)) + ((c.mtvec & 1) && irq ? 4 * code : 0);
  }
  h.update_regimes();
}

std::optional<ExceptionCause> check_interrupt(const Hart& h) {
  const CsrState& c = h.csr;
  const uint64_t pending = h.mip.load(std::memory_order_relaxed) & c.mie;
  if (!pending) return std::nullopt;
  const bool m_enabled = h.priv < Privilege::Machine || (c.mstatus & mstatus::kMie);
  const bool s_enabled = h.priv < Privilege::Supervisor || (h.priv == Privilege::Supervisor && (c.mstatus & mstatus::kSie));
  static constexpr Interrupt kOrder[] = {Interrupt::MachineExternal,    Interrupt::MachineSoftware,
                                         Interrupt::MachineTimer,       Interrupt::SupervisorExternal,
                                         Interrupt::SupervisorSoftware, Interrupt::SupervisorTimer};
  for (Interrupt i : kOrder) {
    const uint64_t bit = 1ull << static_cast<uint64_t>(i);
    if (!(pending & bit)) continue;
    if (c.mideleg & bit) {
      if (h.priv != Privilege::Machine && s_enabled) return ExceptionCause::interrupt(i);
    } else if (m_enabled) {
      return ExceptionCause::interrupt(i);
    }
  }
  return std::nullopt;
}

std::optional<uint64_t> mret(Hart& h) {
  if (h.priv != Privilege::Machine) return std::nullopt;
  CsrState& c = h.csr;
  const unsigned mpp = static_cast<unsigned>((c.mstatus & mstatus::kMpp) >> mstatus::kMppShift);
  const Privilege next = mpp == 3 ? Privilege::Machine : mpp == 1 ? Privilege::Supervisor : Privilege::User;
  uint64_t s = c.mstatus & ~(mstatus::kMie | mstatus::kMpp);
  if (c.mstatus & mstatus::kMpie) s |= mstatus::kMie;
  s |= mstatus::kMpie;
  if (next != Privilege::Machine) s &= ~mstatus::kMprv;
  c.mstatus = s;
  h.priv = next;
  h.update_regimes();
  return c.mepc;
}

std::optional<uint64_t> sret(Hart& h) {
  CsrState& c = h.csr;
  if (h.priv == Privilege::User) return std::nullopt;
  if (h.priv == Privilege::Supervisor && (c.mstatus & mstatus::kTsr)) return std::nullopt;
  const Privilege next = (c.mstatus & mstatus::kSpp) ? Privilege::Supervisor : Privilege::User;
  uint64_t s = c.mstatus & ~(mstatus::kSie | mstatus::kSpp | mstatus::kMprv);
  if (c.mstatus & mstatus::kSpie) s |= mstatus::kSie;
  s |= mstatus::kSpie;
  c.mstatus = s;
  h.priv = next;
  h.update_regimes();
  return c.sepc;
}

EcallResult ecall(Hart& h, uint64_t pc) {
  const EmulationTarget t = h.machine.target();
  if (t == EmulationTarget::User) {
    const std::array<uint64_t, 6> args{h.x[10], h.x[11], h.x[12], h.x[13], h.x[14], h.x[15]};
    const int64_t r = syscall_emulate(h, h.x[17], args, pc);
    h.x[10] = static_cast<uint64_t>(r);
    return EcallResult::Emulated;
  }
  const bool emulate = h.priv == Privilege::Machine || (t == EmulationTarget::Supervisor && h.priv == Privilege::Supervisor);
  if (!emulate) return EcallResult::Trap;
  const std::array<uint64_t, 6> args{h.x[10], h.x[11], h.x[12], h.x[13], h.x[14], h.x[15]};
  const uint64_t ext = h.x[17];
  const SbiResult r = sbi_call(h, ext, h.x[16], args);
  h.x[10] = static_cast<uint64_t>(ext < 0x10 && r.error == 0 ? r.value : r.error);
  if (ext >= 0x10) h.x[11] = static_cast<uint64_t>(r.value);
  return EcallResult::Emulated;
}

}  // namespace rvdbt::sys
