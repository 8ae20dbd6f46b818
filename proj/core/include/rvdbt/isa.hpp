#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace rvdbt {

/// Every RV64IMAC + Zicsr + Zifencei operation, plus the privileged
/// instructions needed for full-system guests. Compressed encodings expand
/// to the base operation they alias.
enum class Op : uint8_t {
  // RV64I
  LUI, AUIPC, JAL, JALR,
  BEQ, BNE, BLT, BGE, BLTU, BGEU,
  LB, LH, LW, LD, LBU, LHU, LWU,
  SB, SH, SW, SD,
  ADDI, SLTI, SLTIU, XORI, ORI, ANDI, SLLI, SRLI, SRAI,
  ADD, SUB, SLL, SLT, SLTU, XOR, SRL, SRA, OR, AND,
  ADDIW, SLLIW, SRLIW, SRAIW,
  ADDW, SUBW, SLLW, SRLW, SRAW,
  FENCE, ECALL, EBREAK,
  // Zifencei
  FENCE_I,
  // Zicsr
  CSRRW, CSRRS, CSRRC, CSRRWI, CSRRSI, CSRRCI,
  // M
  MUL, MULH, MULHSU, MULHU, DIV, DIVU, REM, REMU,
  MULW, DIVW, DIVUW, REMW, REMUW,
  // A
  LR_W, SC_W, AMOSWAP_W, AMOADD_W, AMOXOR_W, AMOAND_W, AMOOR_W,
  AMOMIN_W, AMOMAX_W, AMOMINU_W, AMOMAXU_W,
  LR_D, SC_D, AMOSWAP_D, AMOADD_D, AMOXOR_D, AMOAND_D, AMOOR_D,
  AMOMIN_D, AMOMAX_D, AMOMINU_D, AMOMAXU_D,
  // Privileged
  MRET, SRET, WFI, SFENCE_VMA,
};

inline constexpr int kOpCount = static_cast<int>(Op::SFENCE_VMA) + 1;

/// How an instruction interacts with the rest of the simulated system.
enum class SyncClass : uint8_t { None, MemoryOp, ControlRegOp, ControlFlow };

struct DecodedInstruction {
  Op op = Op::ADDI;
  uint8_t rd = 0;
  uint8_t rs1 = 0;
  uint8_t rs2 = 0;
  uint8_t length = 4;
  SyncClass sync_class = SyncClass::None;
  uint16_t csr = 0;
  int64_t imm = 0;
  uint32_t raw = 0;

  bool compressed() const { return length == 2; }
};

/// Static per-operation properties.
struct OpInfo {
  std::string_view name;
  bool reads_rs1;
  bool reads_rs2;
  bool writes_rd;
  uint8_t mem_width;  // bytes touched by loads/stores/AMOs, else 0
  bool is_load;       // includes LR
  bool is_store;      // includes SC
  bool is_amo;        // AMO*, not LR/SC
  bool is_branch;
  bool is_jump;       // JAL, JALR
  bool is_mul;
  bool is_div;
};

const OpInfo& op_info(Op op);

inline std::string_view op_name(Op op) { return op_info(op).name; }

/// Returns 4 iff the parcel's low two bits are 0b11.
constexpr unsigned parcel_length(uint16_t low16) { return (low16 & 3u) == 3u ? 4u : 2u; }

/// Decodes one instruction. When the low parcel marks a compressed
/// instruction only the low 16 bits of `raw` are consumed. Returns nullopt
/// for encodings that are not defined in RV64IMAC + Zicsr + Zifencei.
std::optional<DecodedInstruction> decode(uint32_t raw);

SyncClass classify_sync(Op op);
inline SyncClass classify_sync(const DecodedInstruction& inst) { return classify_sync(inst.op); }

/// True when the instruction might write a CSR (CSRRW*, or CSRRS/C with a
/// nonzero source).
bool csr_may_write(const DecodedInstruction& inst);

/// Debug rendering, e.g. "addi a0, a0, 1".
std::string disassemble(const DecodedInstruction& inst);

std::string_view reg_name(unsigned index);

/// RISC-V exception and interrupt cause codes.
enum class Exception : uint64_t {
  InstructionMisaligned = 0,
  InstructionAccessFault = 1,
  IllegalInstruction = 2,
  Breakpoint = 3,
  LoadMisaligned = 4,
  LoadAccessFault = 5,
  StoreMisaligned = 6,
  StoreAccessFault = 7,
  EcallFromU = 8,
  EcallFromS = 9,
  EcallFromM = 11,
  InstructionPageFault = 12,
  LoadPageFault = 13,
  StorePageFault = 15,
};

enum class Interrupt : uint64_t {
  SupervisorSoftware = 1,
  MachineSoftware = 3,
  SupervisorTimer = 5,
  MachineTimer = 7,
  SupervisorExternal = 9,
  MachineExternal = 11,
};

inline constexpr uint64_t kInterruptBit = 1ull << 63;

struct ExceptionCause {
  uint64_t code = 0;  // includes kInterruptBit for interrupts
  uint64_t tval = 0;

  static ExceptionCause exception(Exception e, uint64_t tval = 0) {
    return {static_cast<uint64_t>(e), tval};
  }
  static ExceptionCause interrupt(Interrupt i) {
    return {kInterruptBit | static_cast<uint64_t>(i), 0};
  }
  bool is_interrupt() const { return (code & kInterruptBit) != 0; }
  bool operator==(const ExceptionCause&) const = default;
};

enum class Privilege : uint8_t { User = 0, Supervisor = 1, Machine = 3 };

}  // namespace rvdbt
