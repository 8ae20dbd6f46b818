#include "ref_interp.hpp"

#include <cstring>
#include <string_view>

#include "rvdbt/elf.hpp"

namespace rvtest {

namespace {

enum Rop {
  LUI, AUIPC, JAL, JALR, BEQ, BNE, BLT, BGE, BLTU, BGEU,
  LB, LH, LW, LD, LBU, LHU, LWU, SB, SH, SW, SD,
  ADDI, SLTI, SLTIU, XORI, ORI, ANDI, SLLI, SRLI, SRAI,
  ADD, SUB, SLL, SLT, SLTU, XOR, SRL, SRA, OR, AND,
  ADDIW, SLLIW, SRLIW, SRAIW, ADDW, SUBW, SLLW, SRLW, SRAW,
  FENCE, FENCE_I, ECALL, EBREAK, MRET, SRET, WFI, SFENCE,
  CSRRW, CSRRS, CSRRC, CSRRWI, CSRRSI, CSRRCI,
  MUL, MULH, MULHSU, MULHU, DIV, DIVU, REM, REMU, MULW, DIVW, DIVUW, REMW, REMUW,
  LR, SC, AMOSWAP, AMOADD, AMOXOR, AMOAND, AMOOR, AMOMIN, AMOMAX, AMOMINU, AMOMAXU,
};

const std::unordered_map<std::string_view, int>& op_ids() {
  static const std::unordered_map<std::string_view, int> m = {
      {"lui", LUI}, {"auipc", AUIPC}, {"jal", JAL}, {"jalr", JALR}, {"beq", BEQ}, {"bne", BNE},
      {"blt", BLT}, {"bge", BGE}, {"bltu", BLTU}, {"bgeu", BGEU}, {"lb", LB}, {"lh", LH}, {"lw", LW},
      {"ld", LD}, {"lbu", LBU}, {"lhu", LHU}, {"lwu", LWU}, {"sb", SB}, {"sh", SH}, {"sw", SW}, {"sd", SD},
      {"addi", ADDI}, {"slti", SLTI}, {"sltiu", SLTIU}, {"xori", XORI}, {"ori", ORI}, {"andi", ANDI},
      {"slli", SLLI}, {"srli", SRLI}, {"srai", SRAI}, {"add", ADD}, {"sub", SUB}, {"sll", SLL},
      {"slt", SLT}, {"sltu", SLTU}, {"xor", XOR}, {"srl", SRL}, {"sra", SRA}, {"or", OR}, {"and", AND},
      {"addiw", ADDIW}, {"slliw", SLLIW}, {"srliw", SRLIW}, {"sraiw", SRAIW}, {"addw", ADDW},
      {"subw", SUBW}, {"sllw", SLLW}, {"srlw", SRLW}, {"sraw", SRAW}, {"fence", FENCE},
      {"fence.i", FENCE_I}, {"ecall", ECALL}, {"ebreak", EBREAK}, {"mret", MRET}, {"sret", SRET},
      {"wfi", WFI}, {"sfence.vma", SFENCE}, {"csrrw", CSRRW}, {"csrrs", CSRRS}, {"csrrc", CSRRC},
      {"csrrwi", CSRRWI}, {"csrrsi", CSRRSI}, {"csrrci", CSRRCI}, {"mul", MUL}, {"mulh", MULH},
      {"mulhsu", MULHSU}, {"mulhu", MULHU}, {"div", DIV}, {"divu", DIVU}, {"rem", REM}, {"remu", REMU},
      {"mulw", MULW}, {"divw", DIVW}, {"divuw", DIVUW}, {"remw", REMW}, {"remuw", REMUW},
      {"lr.w", LR}, {"lr.d", LR}, {"sc.w", SC}, {"sc.d", SC}, {"amoswap.w", AMOSWAP},
      {"amoswap.d", AMOSWAP}, {"amoadd.w", AMOADD}, {"amoadd.d", AMOADD}, {"amoxor.w", AMOXOR},
      {"amoxor.d", AMOXOR}, {"amoand.w", AMOAND}, {"amoand.d", AMOAND}, {"amoor.w", AMOOR},
      {"amoor.d", AMOOR}, {"amomin.w", AMOMIN}, {"amomin.d", AMOMIN}, {"amomax.w", AMOMAX},
      {"amomax.d", AMOMAX}, {"amominu.w", AMOMINU}, {"amominu.d", AMOMINU}, {"amomaxu.w", AMOMAXU},
      {"amomaxu.d", AMOMAXU},
  };
  return m;
}

int64_t s32(uint64_t v) { return static_cast<int32_t>(static_cast<uint32_t>(v)); }
uint64_t sext_n(uint64_t v, unsigned bytes) {
  const unsigned sh = 64 - 8 * bytes;
  return static_cast<uint64_t>(static_cast<int64_t>(v << sh) >> sh);
}

}  // namespace

RefInterp::RefInterp(uint64_t b, uint64_t size) : base(b), mem(size, 0) {}

void RefInterp::load(const rvdbt::ElfImage& image) {
  for (const auto& s : image.segments) {
    if (!s.data.empty()) write_bytes(s.paddr, s.data.data(), s.data.size());
  }
  pc = image.entry;
}

void RefInterp::write_bytes(uint64_t addr, const void* src, size_t n) {
  std::memcpy(mem.data() + (addr - base), src, n);
}

uint64_t RefInterp::read_u64(uint64_t addr) const {
  uint64_t v;
  std::memcpy(&v, mem.data() + (addr - base), 8);
  return v;
}

void RefInterp::write_u64(uint64_t addr, uint64_t v) { write_bytes(addr, &v, 8); }

bool RefInterp::load_mem(uint64_t a, unsigned n, uint64_t& out) {
  if (!in_range(a, n)) return false;
  out = 0;
  for (unsigned i = 0; i < n; ++i) out |= uint64_t(mem[a - base + i]) << (8 * i);
  return true;
}

bool RefInterp::store_mem(uint64_t a, unsigned n, uint64_t v) {
  if (!in_range(a, n)) return false;
  for (unsigned i = 0; i < n; ++i) mem[a - base + i] = static_cast<uint8_t>(v >> (8 * i));
  if (resv_valid_ && a < resv_addr_ + 8 && resv_addr_ < a + n) resv_valid_ = false;
  return true;
}

RefInterp::Status RefInterp::fail(const std::string& what) {
  error = what;
  status = Status::Error;
  return status;
}

bool RefInterp::csr_access(uint16_t c, bool write, uint64_t wval, uint64_t& old) {
  switch (c) {
    case 0xf14: old = hartid; return !write;
    case 0xb00: case 0xb02: case 0xc00: case 0xc01: case 0xc02:
      old = instret;
      return true;  // writes ignored
    case 0x7c0:
      old = 0;
      return true;
    default:
      old = csrs[c];
      if (write) csrs[c] = wval;
      return true;
  }
}

void RefInterp::sbi() {
  const uint64_t ext = x[17], fid = x[16];
  auto ret = [&](int64_t err, int64_t val) {
    x[10] = static_cast<uint64_t>(err);
    x[11] = static_cast<uint64_t>(val);
  };
  if (ext < 0x10) {
    if (ext == 1) console.push_back(static_cast<char>(x[10]));
    if (ext == 8) {
      status = Status::Exited;
      return;
    }
    x[10] = ext == 2 ? uint64_t(-1) : 0;
    return;
  }
  switch (ext) {
    case 0x53525354:  // SRST
      exit_code = static_cast<int>(x[11]);
      status = Status::Exited;
      return;
    case 0x48534d:  // HSM
      if (fid == 2) return x[10] == 0 ? ret(0, 0) : ret(-3, 0);
      if (fid == 1) {
        status = Status::Exited;
        return;
      }
      return ret(-2, 0);
    case 0x54494d45:  // TIME
      return ret(0, 0);
    default:
      return ret(-2, 0);
  }
}

RefInterp::Status RefInterp::step() {
  if (status != Status::Running) return status;
  uint64_t lo;
  if (!load_mem(pc, 2, lo)) return fail("fetch outside memory");
  uint32_t raw = static_cast<uint32_t>(lo);
  if ((raw & 3) == 3) {
    uint64_t hi;
    if (!load_mem(pc + 2, 2, hi)) return fail("fetch outside memory");
    raw |= static_cast<uint32_t>(hi) << 16;
  }
  Cached& c = cache_[pc];
  if (c.op < 0 || c.raw != raw) {
    const auto d = ref_decode(raw);
    if (!d) return fail("illegal instruction");
    c.raw = raw;
    c.inst = *d;
    c.op = op_ids().at(d->name);
  }
  const RefInst& in = c.inst;
  const uint64_t a = x[in.rs1], b = x[in.rs2];
  const uint64_t imm = static_cast<uint64_t>(in.imm);
  const bool wide = in.name.size() > 2 && in.name.back() == 'd';
  uint64_t next = pc + in.length;
  uint64_t rdv = 0;
  bool wr = true;
  bool transferred = false;

  auto branch = [&](bool cond) {
    wr = false;
    transferred = cond;
    if (cond) next = pc + imm;
  };
  auto ld = [&](unsigned n, bool sign) {
    uint64_t v;
    if (!load_mem(a + imm, n, v)) return false;
    rdv = sign ? sext_n(v, n) : v;
    return true;
  };
  auto st = [&](unsigned n) {
    wr = false;
    return store_mem(a + imm, n, b);
  };

  switch (c.op) {
    case LUI: rdv = imm; break;
    case AUIPC: rdv = pc + imm; break;
    case JAL: rdv = next; next = pc + imm; transferred = true; break;
    case JALR: rdv = next; next = (a + imm) & ~uint64_t(1); transferred = true; break;
    case BEQ: branch(a == b); break;
    case BNE: branch(a != b); break;
    case BLT: branch(int64_t(a) < int64_t(b)); break;
    case BGE: branch(int64_t(a) >= int64_t(b)); break;
    case BLTU: branch(a < b); break;
    case BGEU: branch(a >= b); break;
    case LB: if (!ld(1, true)) return fail("load fault"); break;
    case LH: if (!ld(2, true)) return fail("load fault"); break;
    case LW: if (!ld(4, true)) return fail("load fault"); break;
    case LD: if (!ld(8, false)) return fail("load fault"); break;
    case LBU: if (!ld(1, false)) return fail("load fault"); break;
    case LHU: if (!ld(2, false)) return fail("load fault"); break;
    case LWU: if (!ld(4, false)) return fail("load fault"); break;
    case SB: if (!st(1)) return fail("store fault"); break;
    case SH: if (!st(2)) return fail("store fault"); break;
    case SW: if (!st(4)) return fail("store fault"); break;
    case SD: if (!st(8)) return fail("store fault"); break;
    case ADDI: rdv = a + imm; break;
    case SLTI: rdv = int64_t(a) < int64_t(imm); break;
    case SLTIU: rdv = a < imm; break;
    case XORI: rdv = a ^ imm; break;
    case ORI: rdv = a | imm; break;
    case ANDI: rdv = a & imm; break;
    case SLLI: rdv = a << (imm & 63); break;
    case SRLI: rdv = a >> (imm & 63); break;
    case SRAI: rdv = uint64_t(int64_t(a) >> (imm & 63)); break;
    case ADD: rdv = a + b; break;
    case SUB: rdv = a - b; break;
    case SLL: rdv = a << (b & 63); break;
    case SLT: rdv = int64_t(a) < int64_t(b); break;
    case SLTU: rdv = a < b; break;
    case XOR: rdv = a ^ b; break;
    case SRL: rdv = a >> (b & 63); break;
    case SRA: rdv = uint64_t(int64_t(a) >> (b & 63)); break;
    case OR: rdv = a | b; break;
    case AND: rdv = a & b; break;
    case ADDIW: rdv = uint64_t(s32(a + imm)); break;
    case SLLIW: rdv = uint64_t(s32(a << (imm & 31))); break;
    case SRLIW: rdv = uint64_t(s32(uint32_t(a) >> (imm & 31))); break;
    case SRAIW: rdv = uint64_t(int64_t(int32_t(a) >> (imm & 31))); break;
    case ADDW: rdv = uint64_t(s32(a + b)); break;
    case SUBW: rdv = uint64_t(s32(a - b)); break;
    case SLLW: rdv = uint64_t(s32(a << (b & 31))); break;
    case SRLW: rdv = uint64_t(s32(uint32_t(a) >> (b & 31))); break;
    case SRAW: rdv = uint64_t(int64_t(int32_t(a) >> (b & 31))); break;
    case FENCE: case FENCE_I: case WFI: case SFENCE: wr = false; break;
    case ECALL:
      wr = false;
      sbi();
      break;
    case EBREAK: return fail("ebreak");
    case MRET: case SRET: return fail("trap return not supported");
    case CSRRW: case CSRRS: case CSRRC: case CSRRWI: case CSRRSI: case CSRRCI: {
      const bool imm_form = c.op >= CSRRWI;
      const uint64_t src = imm_form ? uint64_t(in.rs1) : a;
      const int kind = (c.op - CSRRW) % 3;  // 0 write, 1 set, 2 clear
      const bool write = kind == 0 || in.rs1 != 0;
      uint64_t old = 0;
      const uint64_t cur = csrs.count(in.csr) ? csrs[in.csr] : 0;
      const uint64_t nv = kind == 0 ? src : kind == 1 ? (cur | src) : (cur & ~src);
      if (!csr_access(in.csr, write, nv, old)) return fail("csr write to read-only register");
      rdv = old;
      break;
    }
    case MUL: rdv = a * b; break;
    case MULH: rdv = uint64_t((__int128(int64_t(a)) * __int128(int64_t(b))) >> 64); break;
    case MULHSU: rdv = uint64_t((__int128(int64_t(a)) * __int128(b)) >> 64); break;
    case MULHU: rdv = uint64_t((unsigned __int128)a * b >> 64); break;
    case DIV:
      rdv = b == 0 ? ~uint64_t(0) : (int64_t(a) == INT64_MIN && int64_t(b) == -1) ? a : uint64_t(int64_t(a) / int64_t(b));
      break;
    case DIVU: rdv = b == 0 ? ~uint64_t(0) : a / b; break;
    case REM:
      rdv = b == 0 ? a : (int64_t(a) == INT64_MIN && int64_t(b) == -1) ? 0 : uint64_t(int64_t(a) % int64_t(b));
      break;
    case REMU: rdv = b == 0 ? a : a % b; break;
    case MULW: rdv = uint64_t(s32(a * b)); break;
    case DIVW: {
      const int32_t x1 = int32_t(a), y = int32_t(b);
      rdv = uint64_t(int64_t(y == 0 ? -1 : (x1 == INT32_MIN && y == -1) ? x1 : x1 / y));
      break;
    }
    case DIVUW: {
      const uint32_t x1 = uint32_t(a), y = uint32_t(b);
      rdv = uint64_t(s32(y == 0 ? ~0u : x1 / y));
      break;
    }
    case REMW: {
      const int32_t x1 = int32_t(a), y = int32_t(b);
      rdv = uint64_t(int64_t(y == 0 ? x1 : (x1 == INT32_MIN && y == -1) ? 0 : x1 % y));
      break;
    }
    case REMUW: {
      const uint32_t x1 = uint32_t(a), y = uint32_t(b);
      rdv = uint64_t(s32(y == 0 ? x1 : x1 % y));
      break;
    }
    case LR: {
      const unsigned n = wide ? 8 : 4;
      uint64_t v;
      if ((a & (n - 1)) || !load_mem(a, n, v)) return fail("lr fault");
      rdv = sext_n(v, n);
      resv_valid_ = true;
      resv_addr_ = a;
      break;
    }
    case SC: {
      const unsigned n = wide ? 8 : 4;
      if ((a & (n - 1)) || !in_range(a, n)) return fail("sc fault");
      const bool ok = resv_valid_ && resv_addr_ == a;
      resv_valid_ = false;
      if (ok) store_mem(a, n, b);
      rdv = ok ? 0 : 1;
      break;
    }
    default: {  // AMOs
      const unsigned n = wide ? 8 : 4;
      uint64_t v;
      if ((a & (n - 1)) || !load_mem(a, n, v)) return fail("amo fault");
      const uint64_t old = sext_n(v, n);
      const uint64_t src = n == 4 ? sext_n(b, 4) : b;
      uint64_t res = 0;
      switch (c.op) {
        case AMOSWAP: res = src; break;
        case AMOADD: res = old + src; break;
        case AMOXOR: res = old ^ src; break;
        case AMOAND: res = old & src; break;
        case AMOOR: res = old | src; break;
        case AMOMIN: res = int64_t(old) < int64_t(src) ? old : src; break;
        case AMOMAX: res = int64_t(old) > int64_t(src) ? old : src; break;
        case AMOMINU: res = old < src ? old : src; break;
        case AMOMAXU: res = old > src ? old : src; break;
        default: return fail("unknown operation");
      }
      store_mem(a, n, res);
      rdv = old;
      break;
    }
  }
  if (wr && in.rd != 0) x[in.rd] = rdv;
  x[0] = 0;
  ++instret;
  if (trace) trace(TraceRecord{pc, &in, transferred});
  pc = next;
  return status;
}

RefInterp::Status RefInterp::run(uint64_t max_steps) {
  for (uint64_t i = 0; i < max_steps && status == Status::Running; ++i) step();
  if (status == Status::Running) fail("step limit reached");
  return status;
}

}  // namespace rvtest
