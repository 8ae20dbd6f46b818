#pragma once

#include <cstdint>

#include "rvdbt/guest_memory.hpp"
#include "rvdbt/isa.hpp"

namespace rvdbt::mem {

enum class AccessKind : uint8_t { Read, Write, Fetch };

namespace pte {
inline constexpr uint64_t kV = 1 << 0;
inline constexpr uint64_t kR = 1 << 1;
inline constexpr uint64_t kW = 1 << 2;
inline constexpr uint64_t kX = 1 << 3;
inline constexpr uint64_t kU = 1 << 4;
inline constexpr uint64_t kG = 1 << 5;
inline constexpr uint64_t kA = 1 << 6;
inline constexpr uint64_t kD = 1 << 7;
inline constexpr unsigned kPpnShift = 10;
}  // namespace pte

inline constexpr uint64_t kPageSize = 4096;
inline constexpr unsigned kPageShift = 12;

namespace satp {
inline constexpr uint64_t kModeBare = 0;
inline constexpr uint64_t kModeSv39 = 8;
inline constexpr uint64_t mode(uint64_t satp) { return satp >> 60; }
inline constexpr uint64_t asid(uint64_t satp) { return (satp >> 44) & 0xffff; }
inline constexpr uint64_t ppn(uint64_t satp) { return satp & ((1ull << 44) - 1); }
}  // namespace satp

/// What a translation needs to know about the accessing hart.
struct TranslationRegime {
  uint64_t satp = 0;
  Privilege priv = Privilege::Machine;
  bool sum = false;
  bool mxr = false;

  bool translated() const { return priv != Privilege::Machine && satp::mode(satp) == satp::kModeSv39; }
  uint16_t asid() const { return static_cast<uint16_t>(satp::asid(satp)); }
};

/// A resolved mapping for the 4 KiB page containing the translated address.
struct PageMapping {
  uint64_t ppn = 0;        // 4 KiB physical page number for the requested page
  uint8_t flags = 0;       // leaf PTE bits [7:0]
  uint64_t page_size = kPageSize;
  unsigned levels = 0;     // page-table entries read
};

struct WalkResult {
  bool ok = false;
  PageMapping mapping;
  ExceptionCause fault;
};

enum class AdPolicy : uint8_t { HardwareUpdate, TrapOnClear };

struct WalkOptions {
  AdPolicy ad = AdPolicy::HardwareUpdate;
  /// When false the walk never writes PTEs (used for side-effect-free
  /// probes); a needed A/D update then reports the mapping without it.
  bool update_ad = true;
};

ExceptionCause page_fault(AccessKind kind, uint64_t vaddr);
ExceptionCause access_fault(AccessKind kind, uint64_t vaddr);

/// Checks leaf permissions for an access at the given privilege.
bool leaf_permits(uint8_t flags, AccessKind kind, const TranslationRegime& regime);

/// Full translation. Bare mode (or machine privilege) yields an identity
/// mapping with every permission.
WalkResult sv39_walk(GuestMemory& memory, const TranslationRegime& regime, uint64_t vaddr, AccessKind kind,
                     const WalkOptions& options = {});

}  // namespace rvdbt::mem
