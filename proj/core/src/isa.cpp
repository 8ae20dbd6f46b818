#include "rvdbt/isa.hpp"

#include <array>
#include <cstdio>

namespace rvdbt {

namespace {

// name, rs1, rs2, rd, width, load, store, amo, branch, jump, mul, div
constexpr std::array<OpInfo, kOpCount> kOpTable = {{
    {"lui", false, false, true, 0, false, false, false, false, false, false, false},
    {"auipc", false, false, true, 0, false, false, false, false, false, false, false},
    {"jal", false, false, true, 0, false, false, false, false, true, false, false},
    {"jalr", true, false, true, 0, false, false, false, false, true, false, false},
    {"beq", true, true, false, 0, false, false, false, true, false, false, false},
    {"bne", true, true, false, 0, false, false, false, true, false, false, false},
    {"blt", true, true, false, 0, false, false, false, true, false, false, false},
    {"bge", true, true, false, 0, false, false, false, true, false, false, false},
    {"bltu", true, true, false, 0, false, false, false, true, false, false, false},
    {"bgeu", true, true, false, 0, false, false, false, true, false, false, false},
    {"lb", true, false, true, 1, true, false, false, false, false, false, false},
    {"lh", true, false, true, 2, true, false, false, false, false, false, false},
    {"lw", true, false, true, 4, true, false, false, false, false, false, false},
    {"ld", true, false, true, 8, true, false, false, false, false, false, false},
    {"lbu", true, false, true, 1, true, false, false, false, false, false, false},
    {"lhu", true, false, true, 2, true, false, false, false, false, false, false},
    {"lwu", true, false, true, 4, true, false, false, false, false, false, false},
    {"sb", true, true, false, 1, false, true, false, false, false, false, false},
    {"sh", true, true, false, 2, false, true, false, false, false, false, false},
    {"sw", true, true, false, 4, false, true, false, false, false, false, false},
    {"sd", true, true, false, 8, false, true, false, false, false, false, false},
    {"addi", true, false, true, 0, false, false, false, false, false, false, false},
    {"slti", true, false, true, 0, false, false, false, false, false, false, false},
    {"sltiu", true, false, true, 0, false, false, false, false, false, false, false},
    {"xori", true, false, true, 0, false, false, false, false, false, false, false},
    {"ori", true, false, true, 0, false, false, false, false, false, false, false},
    {"andi", true, false, true, 0, false, false, false, false, false, false, false},
    {"slli", true, false, true, 0, false, false, false, false, false, false, false},
    {"srli", true, false, true, 0, false, false, false, false, false, false, false},
    {"srai", true, false, true, 0, false, false, false, false, false, false, false},
    {"add", true, true, true, 0, false, false, false, false, false, false, false},
    {"sub", true, true, true, 0, false, false, false, false, false, false, false},
    {"sll", true, true, true, 0, false, false, false, false, false, false, false},
    {"slt", true, true, true, 0, false, false, false, false, false, false, false},
    {"sltu", true, true, true, 0, false, false, false, false, false, false, false},
    {"xor", true, true, true, 0, false, false, false, false, false, false, false},
    {"srl", true, true, true, 0, false, false, false, false, false, false, false},
    {"sra", true, true, true, 0, false, false, false, false, false, false, false},
    {"or", true, true, true, 0, false, false, false, false, false, false, false},
    {"and", true, true, true, 0, false, false, false, false, false, false, false},
    {"addiw", true, false, true, 0, false, false, false, false, false, false, false},
    {"slliw", true, false, true, 0, false, false, false, false, false, false, false},
    {"srliw", true, false, true, 0, false, false, false, false, false, false, false},
    {"sraiw", true, false, true, 0, false, false, false, false, false, false, false},
    {"addw", true, true, true, 0, false, false, false, false, false, false, false},
    {"subw", true, true, true, 0, false, false, false, false, false, false, false},
    {"sllw", true, true, true, 0, false, false, false, false, false, false, false},
    {"srlw", true, true, true, 0, false, false, false, false, false, false, false},
    {"sraw", true, true, true, 0, false, false, false, false, false, false, false},
    {"fence", false, false, false, 0, false, false, false, false, false, false, false},
    {"ecall", false, false, false, 0, false, false, false, false, false, false, false},
    {"ebreak", false, false, false, 0, false, false, false, false, false, false, false},
    {"fence.i", false, false, false, 0, false, false, false, false, false, false, false},
    {"csrrw", true, false, true, 0, false, false, false, false, false, false, false},
    {"csrrs", true, false, true, 0, false, false, false, false, false, false, false},
    {"csrrc", true, false, true, 0, false, false, false, false, false, false, false},
    {"csrrwi", false, false, true, 0, false, false, false, false, false, false, false},
    {"csrrsi", false, false, true, 0, false, false, false, false, false, false, false},
    {"csrrci", false, false, true, 0, false, false, false, false, false, false, false},
    {"mul", true, true, true, 0, false, false, false, false, false, true, false},
    {"mulh", true, true, true, 0, false, false, false, false, false, true, false},
    {"mulhsu", true, true, true, 0, false, false, false, false, false, true, false},
    {"mulhu", true, true, true, 0, false, false, false, false, false, true, false},
    {"div", true, true, true, 0, false, false, false, false, false, false, true},
    {"divu", true, true, true, 0, false, false, false, false, false, false, true},
    {"rem", true, true, true, 0, false, false, false, false, false, false, true},
    {"remu", true, true, true, 0, false, false, false, false, false, false, true},
    {"mulw", true, true, true, 0, false, false, false, false, false, true, false},
    {"divw", true, true, true, 0, false, false, false, false, false, false, true},
    {"divuw", true, true, true, 0, false, false, false, false, false, false, true},
    {"remw", true, true, true, 0, false, false, false, false, false, false, true},
    {"remuw", true, true, true, 0, false, false, false, false, false, false, true},
    {"lr.w", true, false, true, 4, true, false, false, false, false, false, false},
    {"sc.w", true, true, true, 4, false, true, false, false, false, false, false},
    {"amoswap.w", true, true, true, 4, false, false, true, false, false, false, false},
    {"amoadd.w", true, true, true, 4, false, false, true, false, false, false, false},
    {"amoxor.w", true, true, true, 4, false, false, true, false, false, false, false},
    {"amoand.w", true, true, true, 4, false, false, true, false, false, false, false},
    {"amoor.w", true, true, true, 4, false, false, true, false, false, false, false},
    {"amomin.w", true, true, true, 4, false, false, true, false, false, false, false},
    {"amomax.w", true, true, true, 4, false, false, true, false, false, false, false},
    {"amominu.w", true, true, true, 4, false, false, true, false, false, false, false},
    {"amomaxu.w", true, true, true, 4, false, false, true, false, false, false, false},
    {"lr.d", true, false, true, 8, true, false, false, false, false, false, false},
    {"sc.d", true, true, true, 8, false, true, false, false, false, false, false},
    {"amoswap.d", true, true, true, 8, false, false, true, false, false, false, false},
    {"amoadd.d", true, true, true, 8, false, false, true, false, false, false, false},
    {"amoxor.d", true, true, true, 8, false, false, true, false, false, false, false},
    {"amoand.d", true, true, true, 8, false, false, true, false, false, false, false},
    {"amoor.d", true, true, true, 8, false, false, true, false, false, false, false},
    {"amomin.d", true, true, true, 8, false, false, true, false, false, false, false},
    {"amomax.d", true, true, true, 8, false, false, true, false, false, false, false},
    {"amominu.d", true, true, true, 8, false, false, true, false, false, false, false},
    {"amomaxu.d", true, true, true, 8, false, false, true, false, false, false, false},
    {"mret", false, false, false, 0, false, false, false, false, false, false, false},
    {"sret", false, false, false, 0, false, false, false, false, false, false, false},
    {"wfi", false, false, false, 0, false, false, false, false, false, false, false},
    {"sfence.vma", true, true, false, 0, false, false, false, false, false, false, false},
}};

constexpr uint32_t bits(uint32_t v, unsigned hi, unsigned lo) {
  return (v >> lo) & ((1u << (hi - lo + 1)) - 1);
}

constexpr int64_t sext(uint64_t v, unsigned width) {
  const uint64_t m = 1ull << (width - 1);
  v &= (width == 64) ? ~0ull : ((1ull << width) - 1);
  return static_cast<int64_t>((v ^ m) - m);
}

DecodedInstruction make(Op op, unsigned rd, unsigned rs1, unsigned rs2, int64_t imm, uint32_t raw,
                        unsigned length) {
  DecodedInstruction d;
  d.op = op;
  d.rd = static_cast<uint8_t>(rd);
  d.rs1 = static_cast<uint8_t>(rs1);
  d.rs2 = static_cast<uint8_t>(rs2);
  d.imm = imm;
  d.raw = raw;
  d.length = static_cast<uint8_t>(length);
  d.sync_class = classify_sync(op);
  return d;
}

std::optional<DecodedInstruction> decode_compressed(uint16_t c) {
  const uint32_t raw = c;
  const unsigned quadrant = c & 3;
  const unsigned funct3 = bits(raw, 15, 13);
  const unsigned rd = bits(raw, 11, 7);
  const unsigned rs2 = bits(raw, 6, 2);
  const unsigned rdp = bits(raw, 4, 2) + 8;
  const unsigned rs1p = bits(raw, 9, 7) + 8;
  auto mk = [&](Op op, unsigned d, unsigned s1, unsigned s2, int64_t imm) {
    return make(op, d, s1, s2, imm, raw, 2);
  };

  switch (quadrant) {
    case 0:
      switch (funct3) {
        case 0: {  // c.addi4spn
          const uint32_t imm = (bits(raw, 12, 11) << 4) | (bits(raw, 10, 7) << 6) |
                               (bits(raw, 6, 6) << 2) | (bits(raw, 5, 5) << 3);
          if (imm == 0) return std::nullopt;
          return mk(Op::ADDI, rdp, 2, 0, imm);
        }
        case 2: {  // c.lw
          const uint32_t imm = (bits(raw, 12, 10) << 3) | (bits(raw, 6, 6) << 2) | (bits(raw, 5, 5) << 6);
          return mk(Op::LW, rdp, rs1p, 0, imm);
        }
        case 3: {  // c.ld
          const uint32_t imm = (bits(raw, 12, 10) << 3) | (bits(raw, 6, 5) << 6);
          return mk(Op::LD, rdp, rs1p, 0, imm);
        }
        case 6: {  // c.sw
          const uint32_t imm = (bits(raw, 12, 10) << 3) | (bits(raw, 6, 6) << 2) | (bits(raw, 5, 5) << 6);
          return mk(Op::SW, 0, rs1p, rdp, imm);
        }
        case 7: {  // c.sd
          const uint32_t imm = (bits(raw, 12, 10) << 3) | (bits(raw, 6, 5) << 6);
          return mk(Op::SD, 0, rs1p, rdp, imm);
        }
        default:
          return std::nullopt;  // FP loads/stores and the reserved slot
      }
    case 1: {
      const int64_t imm6 = sext((bits(raw, 12, 12) << 5) | bits(raw, 6, 2), 6);
      switch (funct3) {
        case 0:
          return mk(Op::ADDI, rd, rd, 0, imm6);
        case 1:
          if (rd == 0) return std::nullopt;
          return mk(Op::ADDIW, rd, rd, 0, imm6);
        case 2:
          return mk(Op::ADDI, rd, 0, 0, imm6);
        case 3:
          if (rd == 2) {
            const uint32_t v = (bits(raw, 12, 12) << 9) | (bits(raw, 6, 6) << 4) | (bits(raw, 5, 5) << 6) |
                               (bits(raw, 4, 3) << 7) | (bits(raw, 2, 2) << 5);
            if (v == 0) return std::nullopt;
            return mk(Op::ADDI, 2, 2, 0, sext(v, 10));
          } else {
            if (imm6 == 0) return std::nullopt;
            return mk(Op::LUI, rd, 0, 0, imm6 * 4096);
          }
        case 4: {
          const unsigned funct2 = bits(raw, 11, 10);
          const uint32_t shamt = (bits(raw, 12, 12) << 5) | bits(raw, 6, 2);
          switch (funct2) {
            case 0:
              return mk(Op::SRLI, rs1p, rs1p, 0, shamt);
            case 1:
              return mk(Op::SRAI, rs1p, rs1p, 0, shamt);
            case 2:
              return mk(Op::ANDI, rs1p, rs1p, 0, imm6);
            default: {
              const unsigned f = bits(raw, 6, 5);
              if (bits(raw, 12, 12) == 0) {
                static constexpr Op ops[] = {Op::SUB, Op::XOR, Op::OR, Op::AND};
                return mk(ops[f], rs1p, rs1p, rdp, 0);
              }
              if (f == 0) return mk(Op::SUBW, rs1p, rs1p, rdp, 0);
              if (f == 1) return mk(Op::ADDW, rs1p, rs1p, rdp, 0);
              return std::nullopt;
            }
          }
        }
        case 5: {
          const uint32_t v = (bits(raw, 12, 12) << 11) | (bits(raw, 11, 11) << 4) | (bits(raw, 10, 9) << 8) |
                             (bits(raw, 8, 8) << 10) | (bits(raw, 7, 7) << 6) | (bits(raw, 6, 6) << 7) |
                             (bits(raw, 5, 3) << 1) | (bits(raw, 2, 2) << 5);
          return mk(Op::JAL, 0, 0, 0, sext(v, 12));
        }
        default: {  // c.beqz / c.bnez
          const uint32_t v = (bits(raw, 12, 12) << 8) | (bits(raw, 11, 10) << 3) | (bits(raw, 6, 5) << 6) |
                             (bits(raw, 4, 3) << 1) | (bits(raw, 2, 2) << 5);
          return mk(funct3 == 6 ? Op::BEQ : Op::BNE, 0, rs1p, 0, sext(v, 9));
        }
      }
    }
    case 2:
      switch (funct3) {
        case 0: {
          const uint32_t shamt = (bits(raw, 12, 12) << 5) | bits(raw, 6, 2);
          return mk(Op::SLLI, rd, rd, 0, shamt);
        }
        case 2: {
          if (rd == 0) return std::nullopt;
          const uint32_t v = (bits(raw, 12, 12) << 5) | (bits(raw, 6, 4) << 2) | (bits(raw, 3, 2) << 6);
          return mk(Op::LW, rd, 2, 0, v);
        }
        case 3: {
          if (rd == 0) return std::nullopt;
          const uint32_t v = (bits(raw, 12, 12) << 5) | (bits(raw, 6, 5) << 3) | (bits(raw, 4, 2) << 6);
          return mk(Op::LD, rd, 2, 0, v);
        }
        case 4:
          if (bits(raw, 12, 12) == 0) {
            if (rs2 == 0) {
              if (rd == 0) return std::nullopt;
              return mk(Op::JALR, 0, rd, 0, 0);
            }
            return mk(Op::ADD, rd, 0, rs2, 0);
          }
          if (rs2 == 0) {
            if (rd == 0) return mk(Op::EBREAK, 0, 0, 0, 0);
            return mk(Op::JALR, 1, rd, 0, 0);
          }
          return mk(Op::ADD, rd, rd, rs2, 0);
        case 6: {
          const uint32_t v = (bits(raw, 12, 9) << 2) | (bits(raw, 8, 7) << 6);
          return mk(Op::SW, 0, 2, rs2, v);
        }
        case 7: {
          const uint32_t v = (bits(raw, 12, 10) << 3) | (bits(raw, 9, 7) << 6);
          return mk(Op::SD, 0, 2, rs2, v);
        }
        default:
          return std::nullopt;
      }
    default:
      return std::nullopt;
  }
}

std::optional<DecodedInstruction> decode_full(uint32_t raw) {
  const unsigned opcode = bits(raw, 6, 0);
  const unsigned rd = bits(raw, 11, 7);
  const unsigned funct3 = bits(raw, 14, 12);
  const unsigned rs1 = bits(raw, 19, 15);
  const unsigned rs2 = bits(raw, 24, 20);
  const unsigned funct7 = bits(raw, 31, 25);
  const int64_t imm_i = sext(raw >> 20, 12);
  const int64_t imm_s = sext((bits(raw, 31, 25) << 5) | bits(raw, 11, 7), 12);
  const int64_t imm_b = sext((bits(raw, 31, 31) << 12) | (bits(raw, 7, 7) << 11) | (bits(raw, 30, 25) << 5) |
                                 (bits(raw, 11, 8) << 1),
                             13);
  const int64_t imm_u = sext(raw & 0xfffff000u, 32);
  const int64_t imm_j = sext((bits(raw, 31, 31) << 20) | (bits(raw, 19, 12) << 12) | (bits(raw, 20, 20) << 11) |
                                 (bits(raw, 30, 21) << 1),
                             21);
  auto mk = [&](Op op, unsigned d, unsigned s1, unsigned s2, int64_t imm) {
    return make(op, d, s1, s2, imm, raw, 4);
  };

  switch (opcode) {
    case 0x37:
      return mk(Op::LUI, rd, 0, 0, imm_u);
    case 0x17:
      return mk(Op::AUIPC, rd, 0, 0, imm_u);
    case 0x6f:
      return mk(Op::JAL, rd, 0, 0, imm_j);
    case 0x67:
      if (funct3 != 0) return std::nullopt;
      return mk(Op::JALR, rd, rs1, 0, imm_i);
    case 0x63: {
      static constexpr std::optional<Op> ops[8] = {Op::BEQ, Op::BNE, std::nullopt, std::nullopt,
                                                   Op::BLT, Op::BGE, Op::BLTU, Op::BGEU};
      if (!ops[funct3]) return std::nullopt;
      return mk(*ops[funct3], 0, rs1, rs2, imm_b);
    }
    case 0x03: {
      static constexpr std::optional<Op> ops[8] = {Op::LB, Op::LH, Op::LW, Op::LD,
                                                   Op::LBU, Op::LHU, Op::LWU, std::nullopt};
      if (!ops[funct3]) return std::nullopt;
      return mk(*ops[funct3], rd, rs1, 0, imm_i);
    }
    case 0x23: {
      static constexpr Op ops[4] = {Op::SB, Op::SH, Op::SW, Op::SD};
      if (funct3 > 3) return std::nullopt;
      return mk(ops[funct3], 0, rs1, rs2, imm_s);
    }
    case 0x13:
      switch (funct3) {
        case 0: return mk(Op::ADDI, rd, rs1, 0, imm_i);
        case 2: return mk(Op::SLTI, rd, rs1, 0, imm_i);
        case 3: return mk(Op::SLTIU, rd, rs1, 0, imm_i);
        case 4: return mk(Op::XORI, rd, rs1, 0, imm_i);
        case 6: return mk(Op::ORI, rd, rs1, 0, imm_i);
        case 7: return mk(Op::ANDI, rd, rs1, 0, imm_i);
        case 1:
          if (bits(raw, 31, 26) != 0) return std::nullopt;
          return mk(Op::SLLI, rd, rs1, 0, bits(raw, 25, 20));
        default:  // 5
          if (bits(raw, 31, 26) == 0) return mk(Op::SRLI, rd, rs1, 0, bits(raw, 25, 20));
          if (bits(raw, 31, 26) == 0x10) return mk(Op::SRAI, rd, rs1, 0, bits(raw, 25, 20));
          return std::nullopt;
      }
    case 0x1b:
      switch (funct3) {
        case 0: return mk(Op::ADDIW, rd, rs1, 0, imm_i);
        case 1:
          if (funct7 != 0) return std::nullopt;
          return mk(Op::SLLIW, rd, rs1, 0, rs2);
        case 5:
          if (funct7 == 0) return mk(Op::SRLIW, rd, rs1, 0, rs2);
          if (funct7 == 0x20) return mk(Op::SRAIW, rd, rs1, 0, rs2);
          return std::nullopt;
        default:
          return std::nullopt;
      }
    case 0x33: {
      if (funct7 == 0) {
        static constexpr Op ops[8] = {Op::ADD, Op::SLL, Op::SLT, Op::SLTU, Op::XOR, Op::SRL, Op::OR, Op::AND};
        return mk(ops[funct3], rd, rs1, rs2, 0);
      }
      if (funct7 == 0x20) {
        if (funct3 == 0) return mk(Op::SUB, rd, rs1, rs2, 0);
        if (funct3 == 5) return mk(Op::SRA, rd, rs1, rs2, 0);
        return std::nullopt;
      }
      if (funct7 == 1) {
        static constexpr Op ops[8] = {Op::MUL, Op::MULH, Op::MULHSU, Op::MULHU,
                                      Op::DIV, Op::DIVU, Op::REM,    Op::REMU};
        return mk(ops[funct3], rd, rs1, rs2, 0);
      }
      return std::nullopt;
    }
    case 0x3b: {
      if (funct7 == 0) {
        if (funct3 == 0) return mk(Op::ADDW, rd, rs1, rs2, 0);
        if (funct3 == 1) return mk(Op::SLLW, rd, rs1, rs2, 0);
        if (funct3 == 5) return mk(Op::SRLW, rd, rs1, rs2, 0);
        return std::nullopt;
      }
      if (funct7 == 0x20) {
        if (funct3 == 0) return mk(Op::SUBW, rd, rs1, rs2, 0);
        if (funct3 == 5) return mk(Op::SRAW, rd, rs1, rs2, 0);
        return std::nullopt;
      }
      if (funct7 == 1) {
        static constexpr std::optional<Op> ops[8] = {Op::MULW, std::nullopt, std::nullopt, std::nullopt,
                                                     Op::DIVW, Op::DIVUW,    Op::REMW,     Op::REMUW};
        if (!ops[funct3]) return std::nullopt;
        return mk(*ops[funct3], rd, rs1, rs2, 0);
      }
      return std::nullopt;
    }
    case 0x0f:
      if (funct3 == 0) return mk(Op::FENCE, rd, rs1, 0, imm_i);
      if (funct3 == 1) return mk(Op::FENCE_I, rd, rs1, 0, imm_i);
      return std::nullopt;
    case 0x73: {
      if (funct3 == 0) {
        switch (raw) {
          case 0x00000073: return mk(Op::ECALL, 0, 0, 0, 0);
          case 0x00100073: return mk(Op::EBREAK, 0, 0, 0, 0);
          case 0x30200073: return mk(Op::MRET, 0, 0, 0, 0);
          case 0x10200073: return mk(Op::SRET, 0, 0, 0, 0);
          case 0x10500073: return mk(Op::WFI, 0, 0, 0, 0);
          default: break;
        }
        if (funct7 == 0x09 && rd == 0) return mk(Op::SFENCE_VMA, 0, rs1, rs2, 0);
        return std::nullopt;
      }
      if (funct3 == 4) return std::nullopt;
      static constexpr Op ops[8] = {Op::CSRRW, Op::CSRRW, Op::CSRRS, Op::CSRRC,
                                    Op::CSRRW, Op::CSRRWI, Op::CSRRSI, Op::CSRRCI};
      auto d = mk(ops[funct3], rd, rs1, 0, funct3 >= 5 ? static_cast<int64_t>(rs1) : 0);
      d.csr = static_cast<uint16_t>(raw >> 20);
      return d;
    }
    case 0x2f: {
      if (funct3 != 2 && funct3 != 3) return std::nullopt;
      const bool dw = funct3 == 3;
      const unsigned funct5 = bits(raw, 31, 27);
      Op op;
      switch (funct5) {
        case 0x02:
          if (rs2 != 0) return std::nullopt;
          op = dw ? Op::LR_D : Op::LR_W;
          break;
        case 0x03: op = dw ? Op::SC_D : Op::SC_W; break;
        case 0x01: op = dw ? Op::AMOSWAP_D : Op::AMOSWAP_W; break;
        case 0x00: op = dw ? Op::AMOADD_D : Op::AMOADD_W; break;
        case 0x04: op = dw ? Op::AMOXOR_D : Op::AMOXOR_W; break;
        case 0x0c: op = dw ? Op::AMOAND_D : Op::AMOAND_W; break;
        case 0x08: op = dw ? Op::AMOOR_D : Op::AMOOR_W; break;
        case 0x10: op = dw ? Op::AMOMIN_D : Op::AMOMIN_W; break;
        case 0x14: op = dw ? Op::AMOMAX_D : Op::AMOMAX_W; break;
        case 0x18: op = dw ? Op::AMOMINU_D : Op::AMOMINU_W; break;
        case 0x1c: op = dw ? Op::AMOMAXU_D : Op::AMOMAXU_W; break;
        default: return std::nullopt;
      }
      return mk(op, rd, rs1, rs2, 0);
    }
    default:
      return std::nullopt;
  }
}

constexpr std::array<std::string_view, 32> kRegNames = {
    "zero", "ra", "sp", "gp", "tp",  "t0",  "t1", "t2", "s0", "s1", "a0",
    "a1",   "a2", "a3", "a4", "a5",  "a6",  "a7", "s2", "s3", "s4", "s5",
    "s6",   "s7", "s8", "s9", "s10", "s11", "t3", "t4", "t5", "t6"};

}  // namespace

const OpInfo& op_info(Op op) { return kOpTable[static_cast<size_t>(op)]; }

std::optional<DecodedInstruction> decode(uint32_t raw) {
  if (parcel_length(static_cast<uint16_t>(raw)) == 2) return decode_compressed(static_cast<uint16_t>(raw));
  return decode_full(raw);
}

SyncClass classify_sync(Op op) {
  switch (op) {
    case Op::FENCE:
    case Op::FENCE_I:
    case Op::SFENCE_VMA:
    case Op::WFI:
    case Op::CSRRW:
    case Op::CSRRS:
    case Op::CSRRC:
    case Op::CSRRWI:
    case Op::CSRRSI:
    case Op::CSRRCI:
      return SyncClass::ControlRegOp;
    case Op::JAL:
    case Op::JALR:
    case Op::BEQ:
    case Op::BNE:
    case Op::BLT:
    case Op::BGE:
    case Op::BLTU:
    case Op::BGEU:
    case Op::ECALL:
    case Op::EBREAK:
    case Op::MRET:
    case Op::SRET:
      return SyncClass::ControlFlow;
    default: {
      const auto& info = op_info(op);
      if (info.is_load || info.is_store || info.is_amo) return SyncClass::MemoryOp;
      return SyncClass::None;
    }
  }
}

bool csr_may_write(const DecodedInstruction& inst) {
  switch (inst.op) {
    case Op::CSRRW:
    case Op::CSRRWI:
      return true;
    case Op::CSRRS:
    case Op::CSRRC:
      return inst.rs1 != 0;
    case Op::CSRRSI:
    case Op::CSRRCI:
      return inst.imm != 0;
    default:
      return false;
  }
}

std::string_view reg_name(unsigned index) { return kRegNames[index & 31]; }

std::string disassemble(const DecodedInstruction& d) {
  const auto& info = op_info(d.op);
  char buf[96];
  const auto rd = reg_name(d.rd), rs1 = reg_name(d.rs1), rs2 = reg_name(d.rs2);
  const long long imm = static_cast<long long>(d.imm);
  auto fmt = [&](const char* f, auto... args) {
    std::snprintf(buf, sizeof buf, f, args...);
    return std::string(buf);
  };
  const std::string name(info.name);
  if (info.is_branch) return fmt("%s %.*s, %.*s, %lld", name.c_str(), int(rs1.size()), rs1.data(),
                                 int(rs2.size()), rs2.data(), imm);
  if (info.is_load && !info.is_amo && d.op != Op::LR_W && d.op != Op::LR_D)
    return fmt("%s %.*s, %lld(%.*s)", name.c_str(), int(rd.size()), rd.data(), imm, int(rs1.size()), rs1.data());
  if (info.is_store && d.op != Op::SC_W && d.op != Op::SC_D)
    return fmt("%s %.*s, %lld(%.*s)", name.c_str(), int(rs2.size()), rs2.data(), imm, int(rs1.size()), rs1.data());
  switch (d.op) {
    case Op::LUI:
    case Op::AUIPC:
      return fmt("%s %.*s, 0x%llx", name.c_str(), int(rd.size()), rd.data(),
                 static_cast<unsigned long long>(d.imm >> 12) & 0xfffff);
    case Op::JAL:
      return fmt("%s %.*s, %lld", name.c_str(), int(rd.size()), rd.data(), imm);
    case Op::JALR:
      return fmt("%s %.*s, %lld(%.*s)", name.c_str(), int(rd.size()), rd.data(), imm, int(rs1.size()), rs1.data());
    case Op::CSRRW:
    case Op::CSRRS:
    case Op::CSRRC:
      return fmt("%s %.*s, 0x%x, %.*s", name.c_str(), int(rd.size()), rd.data(), d.csr, int(rs1.size()), rs1.data());
    case Op::CSRRWI:
    case Op::CSRRSI:
    case Op::CSRRCI:
      return fmt("%s %.*s, 0x%x, %lld", name.c_str(), int(rd.size()), rd.data(), d.csr, imm);
    case Op::FENCE:
    case Op::FENCE_I:
    case Op::ECALL:
    case Op::EBREAK:
    case Op::MRET:
    case Op::SRET:
    case Op::WFI:
      return name;
    case Op::SFENCE_VMA:
      return fmt("%s %.*s, %.*s", name.c_str(), int(rs1.size()), rs1.data(), int(rs2.size()), rs2.data());
    default:
      break;
  }
  if (info.reads_rs2 || info.is_amo || d.op == Op::SC_W || d.op == Op::SC_D)
    return fmt("%s %.*s, %.*s, %.*s", name.c_str(), int(rd.size()), rd.data(), int(rs1.size()), rs1.data(),
               int(rs2.size()), rs2.data());
  if (d.op == Op::LR_W || d.op == Op::LR_D)
    return fmt("%s %.*s, (%.*s)", name.c_str(), int(rd.size()), rd.data(), int(rs1.size()), rs1.data());
  return fmt("%s %.*s, %.*s, %lld", name.c_str(), int(rd.size()), rd.data(), int(rs1.size()), rs1.data(), imm);
}

}  // namespace rvdbt
