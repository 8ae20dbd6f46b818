#pragma once

#include <cstdint>

#include "rvdbt/isa.hpp"

namespace rvdbt {

/// A 12-bit CSR number. Bits [9:8] encode the lowest privilege allowed to
/// access it and bits [11:10] == 0b11 mark it read-only.
struct CsrAddress {
  uint16_t addr;

  constexpr Privilege min_privilege() const {
    const unsigned p = (addr >> 8) & 3;
    return p == 0 ? Privilege::User : p == 1 ? Privilege::Supervisor : Privilege::Machine;
  }
  constexpr bool read_only() const { return ((addr >> 10) & 3) == 3; }
  /// Custom machine-mode read/write range (0x7C0-0x7FF).
  constexpr bool machine_custom_rw() const { return addr >= 0x7c0 && addr <= 0x7ff; }
};

namespace csr {
inline constexpr uint16_t kSstatus = 0x100;
inline constexpr uint16_t kSie = 0x104;
inline constexpr uint16_t kStvec = 0x105;
inline constexpr uint16_t kScounteren = 0x106;
inline constexpr uint16_t kSscratch = 0x140;
inline constexpr uint16_t kSepc = 0x141;
inline constexpr uint16_t kScause = 0x142;
inline constexpr uint16_t kStval = 0x143;
inline constexpr uint16_t kSip = 0x144;
inline constexpr uint16_t kSatp = 0x180;

inline constexpr uint16_t kMstatus = 0x300;
inline constexpr uint16_t kMisa = 0x301;
inline constexpr uint16_t kMedeleg = 0x302;
inline constexpr uint16_t kMideleg = 0x303;
inline constexpr uint16_t kMie = 0x304;
inline constexpr uint16_t kMtvec = 0x305;
inline constexpr uint16_t kMcounteren = 0x306;
inline constexpr uint16_t kMcountinhibit = 0x320;
inline constexpr uint16_t kMscratch = 0x340;
inline constexpr uint16_t kMepc = 0x341;
inline constexpr uint16_t kMcause = 0x342;
inline constexpr uint16_t kMtval = 0x343;
inline constexpr uint16_t kMip = 0x344;
inline constexpr uint16_t kPmpcfg0 = 0x3a0;
inline constexpr uint16_t kPmpaddr0 = 0x3b0;

/// Simulator control register (vendor range).
inline constexpr uint16_t kSimctrl = 0x7c0;

inline constexpr uint16_t kMcycle = 0xb00;
inline constexpr uint16_t kMinstret = 0xb02;
inline constexpr uint16_t kCycle = 0xc00;
inline constexpr uint16_t kTime = 0xc01;
inline constexpr uint16_t kInstret = 0xc02;

inline constexpr uint16_t kMvendorid = 0xf11;
inline constexpr uint16_t kMarchid = 0xf12;
inline constexpr uint16_t kMimpid = 0xf13;
inline constexpr uint16_t kMhartid = 0xf14;
}  // namespace csr

namespace mstatus {
inline constexpr uint64_t kSie = 1ull << 1;
inline constexpr uint64_t kMie = 1ull << 3;
inline constexpr uint64_t kSpie = 1ull << 5;
inline constexpr uint64_t kMpie = 1ull << 7;
inline constexpr uint64_t kSpp = 1ull << 8;
inline constexpr uint64_t kMppShift = 11;
inline constexpr uint64_t kMpp = 3ull << kMppShift;
inline constexpr uint64_t kMprv = 1ull << 17;
inline constexpr uint64_t kSum = 1ull << 18;
inline constexpr uint64_t kMxr = 1ull << 19;
inline constexpr uint64_t kTvm = 1ull << 20;
inline constexpr uint64_t kTw = 1ull << 21;
inline constexpr uint64_t kTsr = 1ull << 22;
inline constexpr uint64_t kUxl = 2ull << 32;
inline constexpr uint64_t kSxl = 2ull << 34;

inline constexpr uint64_t kWritableM =
    kSie | kMie | kSpie | kMpie | kSpp | kMpp | kMprv | kSum | kMxr | kTvm | kTw | kTsr;
inline constexpr uint64_t kSstatusMask = kSie | kSpie | kSpp | kSum | kMxr | kUxl;
}  // namespace mstatus

namespace mip {
inline constexpr uint64_t kSsip = 1ull << 1;
inline constexpr uint64_t kMsip = 1ull << 3;
inline constexpr uint64_t kStip = 1ull << 5;
inline constexpr uint64_t kMtip = 1ull << 7;
inline constexpr uint64_t kSeip = 1ull << 9;
inline constexpr uint64_t kMeip = 1ull << 11;
inline constexpr uint64_t kSupervisorBits = kSsip | kStip | kSeip;
inline constexpr uint64_t kAll = kSsip | kMsip | kStip | kMtip | kSeip | kMeip;
}  // namespace mip

/// SIMCTRL bit layout.
///   [3:0]  pipeline model id for the writing hart
///   [7:4]  memory model id (global)
///   [8]    line size select: 0 = 64 B, 1 = 4096 B
///   [9]    execution mode: 0 = lockstep, 1 = parallel
///   [31]   sticky error flag (write 1 to clear)
namespace simctrl {
inline constexpr uint64_t kPipelineMask = 0xf;
inline constexpr unsigned kMemoryShift = 4;
inline constexpr uint64_t kMemoryMask = 0xf << kMemoryShift;
inline constexpr uint64_t kLineSize4K = 1ull << 8;
inline constexpr uint64_t kParallel = 1ull << 9;
inline constexpr uint64_t kError = 1ull << 31;
}  // namespace simctrl

}  // namespace rvdbt
