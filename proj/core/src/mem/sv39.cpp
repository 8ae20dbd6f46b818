#include "rvdbt/mem/sv39.hpp"

namespace rvdbt::mem {

ExceptionCause page_fault(AccessKind kind, uint64_t vaddr) {
  switch (kind) {
    case AccessKind::Fetch: return ExceptionCause::exception(Exception::InstructionPageFault, vaddr);
    case AccessKind::Read: return ExceptionCause::exception(Exception::LoadPageFault, vaddr);
    default: return ExceptionCause::exception(Exception::StorePageFault, vaddr);
  }
}

ExceptionCause access_fault(AccessKind kind, uint64_t vaddr) {
  switch (kind) {
    case AccessKind::Fetch: return ExceptionCause::exception(Exception::InstructionAccessFault, vaddr);
    case AccessKind::Read: return ExceptionCause::exception(Exception::LoadAccessFault, vaddr);
    default: return ExceptionCause::exception(Exception::StoreAccessFault, vaddr);
  }
}

bool leaf_permits(uint8_t flags, AccessKind kind, const TranslationRegime& regime) {
  const bool user_page = flags & pte::kU;
  if (regime.priv == Privilege::User && !user_page) return false;
  if (regime.priv == Privilege::Supervisor && user_page) {
    if (kind == AccessKind::Fetch || !regime.sum) return false;
  }
  switch (kind) {
    case AccessKind::Fetch: return flags & pte::kX;
    case AccessKind::Read: return (flags & pte::kR) || (regime.mxr && (flags & pte::kX));
    default: return flags & pte::kW;
  }
}

WalkResult sv39_walk(GuestMemory& memory, const TranslationRegime& regime, uint64_t vaddr, AccessKind kind,
                     const WalkOptions& options) {
  WalkResult r;
  if (!regime.translated()) {
    r.ok = true;
    r.mapping.ppn = vaddr >> kPageShift;
    r.mapping.flags = pte::kV | pte::kR | pte::kW | pte::kX | pte::kU | pte::kA | pte::kD;
    r.mapping.levels = 0;
    return r;
  }

  // Bits 63:39 must replicate bit 38.
  const int64_t sv = static_cast<int64_t>(vaddr << 25) >> 25;
  if (static_cast<uint64_t>(sv) != vaddr) {
    r.fault = page_fault(kind, vaddr);
    return r;
  }

  uint64_t table = satp::ppn(regime.satp) << kPageShift;
  unsigned levels = 0;
  for (int level = 2; level >= 0; --level) {
    const uint64_t vpn = (vaddr >> (kPageShift + 9 * level)) & 0x1ff;
    const uint64_t pte_addr = table + vpn * 8;
    if (!memory.contains(pte_addr, 8)) {
      r.fault = access_fault(kind, vaddr);
      return r;
    }
    uint64_t entry = __atomic_load_n(reinterpret_cast<uint64_t*>(memory.host(pte_addr)), __ATOMIC_ACQUIRE);
    ++levels;
    if (!(entry & pte::kV) || (!(entry & pte::kR) && (entry & pte::kW)) || (entry >> 54) != 0) {
      r.fault = page_fault(kind, vaddr);
      return r;
    }
    if (!(entry & (pte::kR | pte::kX))) {
      if (level == 0) {
        r.fault = page_fault(kind, vaddr);
        return r;
      }
      table = (entry >> pte::kPpnShift) << kPageShift;
      continue;
    }

    const uint64_t ppn = entry >> pte::kPpnShift;
    const uint64_t low_mask = (1ull << (9 * level)) - 1;
    if (ppn & low_mask) {
      r.fault = page_fault(kind, vaddr);
      return r;
    }
    if (!leaf_permits(static_cast<uint8_t>(entry), kind, regime)) {
      r.fault = page_fault(kind, vaddr);
      return r;
    }
    const bool need_a = !(entry & pte::kA);
    const bool need_d = kind == AccessKind::Write && !(entry & pte::kD);
    if (need_a || need_d) {
      if (options.ad == AdPolicy::TrapOnClear) {
        r.fault = page_fault(kind, vaddr);
        return r;
      }
      if (options.update_ad) {
        const uint64_t updated = entry | pte::kA | (need_d ? pte::kD : 0);
        auto* slot = reinterpret_cast<uint64_t*>(memory.host(pte_addr));
        // Another hart may race on the PTE in parallel mode; retry the walk
        // if it changed underneath us.
        if (!__atomic_compare_exchange_n(slot, &entry, updated, false, __ATOMIC_ACQ_REL, __ATOMIC_ACQUIRE))
          return sv39_walk(memory, regime, vaddr, kind, options);
        entry = updated;
      }
    }
    r.ok = true;
    r.mapping.ppn = (ppn & ~low_mask) | ((vaddr >> kPageShift) & low_mask);
    r.mapping.flags = static_cast<uint8_t>(entry);
    r.mapping.page_size = kPageSize << (9 * level);
    r.mapping.levels = levels;
    return r;
  }
  r.fault = page_fault(kind, vaddr);
  return r;
}

}  // namespace rvdbt::mem
