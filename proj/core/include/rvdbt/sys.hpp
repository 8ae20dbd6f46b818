#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "rvdbt/isa.hpp"

namespace rvdbt {
struct Hart;
}

namespace rvdbt::sys {

enum class EmulationTarget : uint8_t { User, Supervisor, Machine };

std::string_view target_name(EmulationTarget t);
std::optional<EmulationTarget> target_from_name(std::string_view name);

/// CSR access with privilege checks. Returns false when the access must
/// raise an illegal-instruction exception. Writes of read-only CSRs are
/// rejected by the caller before csr_write is reached.
bool csr_read(Hart& h, uint16_t addr, uint64_t& value);
bool csr_write(Hart& h, uint16_t addr, uint64_t value);

/// Current SIMCTRL view for a hart (its pipeline id plus global state).
uint64_t simctrl_value(const Hart& h);

/// Enters the trap handler selected by medeleg/mideleg. `epc` is the pc of
/// the faulting instruction, or of the next instruction for interrupts.
void take_trap(Hart& h, const ExceptionCause& cause, uint64_t epc);

/// Highest-priority pending and enabled interrupt, if any.
std::optional<ExceptionCause> check_interrupt(const Hart& h);

/// Returns the new pc, or nullopt if the instruction is illegal here.
std::optional<uint64_t> mret(Hart& h);
std::optional<uint64_t> sret(Hart& h);

enum class EcallResult : uint8_t { Emulated, Trap };

/// Handles ECALL in the emulation layers. On Emulated the instruction
/// completes normally (a0/a1 hold the result).
EcallResult ecall(Hart& h, uint64_t pc);

struct SbiResult {
  int64_t error = 0;
  int64_t value = 0;
};

namespace sbi {
inline constexpr int64_t kSuccess = 0;
inline constexpr int64_t kErrFailed = -1;
inline constexpr int64_t kErrNotSupported = -2;
inline constexpr int64_t kErrInvalidParam = -3;
inline constexpr int64_t kErrAlreadyAvailable = -6;

inline constexpr uint64_t kExtBase = 0x10;
inline constexpr uint64_t kExtTime = 0x54494d45;
inline constexpr uint64_t kExtIpi = 0x735049;
inline constexpr uint64_t kExtHsm = 0x48534d;
inline constexpr uint64_t kExtSrst = 0x53525354;
}  // namespace sbi

SbiResult sbi_call(Hart& h, uint64_t ext, uint64_t fid, const std::array<uint64_t, 6>& args);

/// Linux riscv64 syscall emulation for the user target. Returns the value
/// for a0 (negative errno on failure).
int64_t syscall_emulate(Hart& h, uint64_t number, const std::array<uint64_t, 6>& args, uint64_t pc);

namespace nr {
inline constexpr uint64_t kGetcwd = 17;
inline constexpr uint64_t kIoctl = 29;
inline constexpr uint64_t kClose = 57;
inline constexpr uint64_t kRead = 63;
inline constexpr uint64_t kWrite = 64;
inline constexpr uint64_t kWritev = 66;
inline constexpr uint64_t kFstat = 80;
inline constexpr uint64_t kExit = 93;
inline constexpr uint64_t kExitGroup = 94;
inline constexpr uint64_t kSetTidAddress = 96;
inline constexpr uint64_t kFutex = 98;
inline constexpr uint64_t kClockGettime = 113;
inline constexpr uint64_t kSchedYield = 124;
inline constexpr uint64_t kGetpid = 172;
inline constexpr uint64_t kGettid = 178;
inline constexpr uint64_t kBrk = 214;
inline constexpr uint64_t kMunmap = 215;
inline constexpr uint64_t kClone = 220;
inline constexpr uint64_t kMmap = 222;
}  // namespace nr

}  // namespace rvdbt::sys
