#include <spdlog/spdlog.h>

#include "guest_access.hpp"
#include "rvdbt/csr.hpp"
#include "rvdbt/hart.hpp"
#include "rvdbt/machine.hpp"
#include "rvdbt/sys.hpp"

namespace rvdbt::sys {

namespace {

uint64_t software_bit(const Machine& m) {
  return m.target() == EmulationTarget::Machine ? mip::kMsip : mip::kSsip;
}

SbiResult send_ipi(Hart& h, uint64_t mask, uint64_t base) {
  Machine& m = h.machine;
  const uint64_t bit = software_bit(m);
  if (base == ~uint64_t(0)) {
    for (unsigned i = 0; i < m.cores(); ++i) m.raise_pending(m.hart(i), bit);
    return {};
  }
  for (unsigned i = 0; i < 64; ++i) {
    if (!((mask >> i) & 1)) continue;
    if (base + i >= m.cores()) return {sbi::kErrInvalidParam, 0};
  }
  for (unsigned i = 0; i < 64; ++i)
    if ((mask >> i) & 1) m.raise_pending(m.hart(static_cast<unsigned>(base + i)), bit);
  return {};
}

SbiResult hart_start(Hart& h, uint64_t hartid, uint64_t start, uint64_t opaque) {
  Machine& m = h.machine;
  if (hartid >= m.cores()) return {sbi::kErrInvalidParam, 0};
  Hart& t = m.hart(static_cast<unsigned>(hartid));
  if (t.wait.load() != WaitState::Stopped) return {sbi::kErrAlreadyAvailable, 0};
  t.pc = start;
  t.x[10] = hartid;
  t.x[11] = opaque;
  t.priv = m.target() == EmulationTarget::Machine ? Privilege::Machine : Privilege::Supervisor;
  t.csr.satp = 0;
  t.csr.mstatus &= ~(mstatus::kSie | mstatus::kMie);
  t.update_regimes();
  t.entered_taken = true;
  t.wait.store(WaitState::None);
  m.notify(t);
  return {};
}

}  // namespace

SbiResult sbi_call(Hart& h, uint64_t ext, uint64_t fid, const std::array<uint64_t, 6>& a) {
  Machine& m = h.machine;
  switch (ext) {
    case 0x00:
      m.set_timer(h, a[0]);
      return {};
    case 0x01:
      m.console_put(static_cast<char>(a[0]));
      return {};
    case 0x02:
      return {0, -1};
    case 0x03:
      m.clear_pending(h, software_bit(m));
      return {};
    case 0x04: {
      uint64_t mask = 0;
      if (a[0] && !copy_from_guest(h, a[0], &mask, sizeof mask)) return {sbi::kErrInvalidParam, 0};
      return send_ipi(h, a[0] ? mask : 0, a[0] ? 0 : ~uint64_t(0));
    }
    case 0x05:
    case 0x06:
    case 0x07:
      return {};
    case 0x08:
      m.stop(0, StopReason::Exit, "sbi shutdown");
      return {};
    case sbi::kExtBase:
      switch (fid) {
        case 0: return {0, 0x02000000};
        case 1: return {0, 0x5256};
        case 2: return {0, 1};
        case 3: {
          const uint64_t e = a[0];
          const bool known = e <= 0x08 || e == sbi::kExtBase || e == sbi::kExtTime || e == sbi::kExtIpi ||
                             e == sbi::kExtHsm || e == sbi::kExtSrst;
          return {0, known ? 1 : 0};
        }
        case 4:
        case 5:
        case 6: return {0, 0};
        default: return {sbi::kErrNotSupported, 0};
      }
    case sbi::kExtTime:
      if (fid != 0) return {sbi::kErrNotSupported, 0};
      m.set_timer(h, a[0]);
      return {};
    case sbi::kExtIpi:
      if (fid != 0) return {sbi::kErrNotSupported, 0};
      return send_ipi(h, a[0], a[1]);
    case sbi::kExtHsm:
      switch (fid) {
        case 0: return hart_start(h, a[0], a[1], a[2]);
        case 1:
          h.wait.store(WaitState::Stopped);
          return {};
        case 2:
          if (a[0] >= m.cores()) return {sbi::kErrInvalidParam, 0};
          return {0, m.hart(static_cast<unsigned>(a[0])).wait.load() == WaitState::Stopped ? 1 : 0};
        default: return {sbi::kErrNotSupported, 0};
      }
    case sbi::kExtSrst:
      if (fid != 0) return {sbi::kErrNotSupported, 0};
      // The reset reason doubles as the exit status of the run.
      m.stop(static_cast<int>(a[1]), StopReason::Exit, "sbi system reset");
      return {};
    default:
      spdlog::debug("core {}: unsupported SBI call ext=0x{:x} fid={}", h.id(), ext, fid);
      return {sbi::kErrNotSupported, 0};
  }
}

}  // namespace rvdbt::sys
