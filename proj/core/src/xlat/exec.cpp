#include <algorithm>
#include <array>
#include <atomic>
#include <cstring>
#include <type_traits>
#include <utility>

#include "rvdbt/csr.hpp"
#include "rvdbt/hart.hpp"
#include "rvdbt/machine.hpp"
#include "rvdbt/sys.hpp"
#include "rvdbt/xlat.hpp"

namespace rvdbt::xlat {

using mem::AccessKind;

namespace {

inline uint64_t sext32(uint64_t v) { return static_cast<uint64_t>(static_cast<int64_t>(static_cast<int32_t>(v))); }

template <typename T>
inline uint64_t extend(T v) {
  if constexpr (std::is_signed_v<T>)
    return static_cast<uint64_t>(static_cast<int64_t>(v));
  else
    return static_cast<uint64_t>(v);
}

StepStatus raise(Hart& h, ExceptionCause cause, uint64_t pc) {
  if (h.machine.target() == sys::EmulationTarget::User) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "unhandled exception %llu (tval 0x%llx) in user program",
                  static_cast<unsigned long long>(cause.code), static_cast<unsigned long long>(cause.tval));
    h.pc = pc;
    h.machine.fail(h, buf);
    return StepStatus::Trap;
  }
  sys::take_trap(h, cause, pc);
  return StepStatus::Trap;
}

inline StepStatus illegal(Hart& h, const Step& s) {
  return raise(h, ExceptionCause::exception(Exception::IllegalInstruction, s.raw), s.pc);
}

[[gnu::noinline]] uint8_t* data_slow(Hart& h, uint64_t va, AccessKind kind, const Step& s, bool exclusive) {
  const mem::AccessOutcome out = h.memsys.data_access(h.id(), va, kind, h.data_regime, exclusive);
  h.ctx.accumulate(out.latency);
  if (h.machine.config().check_inclusion) {
    ++h.cm.stats.inclusion_scans;
    h.cm.stats.inclusion_violations += h.memsys.check_inclusion(h.id());
  }
  if (!out.ok) {
    raise(h, out.fault, s.pc);
    return nullptr;
  }
  return out.host;
}

/// Host address for an access that stays inside one L0 line, or nullptr
/// after raising the fault.
inline uint8_t* data_ptr(Hart& h, uint64_t va, AccessKind kind, const Step& s) {
  const uint64_t host = kind == AccessKind::Write ? h.cm.l0d.lookup_write(va) : h.cm.l0d.lookup_read(va);
  if (host) [[likely]] {
    ++h.cm.stats.l0d_hits;
    if (h.shadow_l0) [[unlikely]]
      h.memsys.shadow_check(h.id(), va, kind, h.data_regime, host);
    return reinterpret_cast<uint8_t*>(host);
  }
  return data_slow(h, va, kind, s, false);
}

// Misaligned accesses go byte by byte; every byte is translated before
// anything is written so a fault leaves memory untouched.
bool misaligned_load(Hart& h, uint64_t va, unsigned size, const Step& s, uint64_t& value) {
  uint64_t v = 0;
  for (unsigned i = 0; i < size; ++i) {
    const uint8_t* p = data_ptr(h, va + i, AccessKind::Read, s);
    if (!p) return false;
    v |= uint64_t(*p) << (8 * i);
  }
  value = v;
  return true;
}

bool misaligned_store(Hart& h, uint64_t va, unsigned size, const Step& s, uint64_t value) {
  uint8_t* ptrs[8];
  for (unsigned i = 0; i < size; ++i) {
    ptrs[i] = data_ptr(h, va + i, AccessKind::Write, s);
    if (!ptrs[i]) return false;
  }
  for (unsigned i = 0; i < size; ++i) *ptrs[i] = static_cast<uint8_t>(value >> (8 * i));
  return true;
}

template <typename T>
StepStatus exec_load(Hart& h, const Step& s) {
  using U = std::make_unsigned_t<T>;
  const uint64_t va = h.x[s.rs1] + static_cast<uint64_t>(s.imm);
  T v;
  if ((va & (sizeof(T) - 1)) == 0) [[likely]] {
    uint8_t* p = data_ptr(h, va, AccessKind::Read, s);
    if (!p) return StepStatus::Trap;
    v = static_cast<T>(std::atomic_ref<U>(*reinterpret_cast<U*>(p)).load(std::memory_order_relaxed));
  } else {
    uint64_t raw;
    if (!misaligned_load(h, va, sizeof(T), s, raw)) return StepStatus::Trap;
    v = static_cast<T>(static_cast<U>(raw));
  }
  h.x[s.rd] = extend(v);
  return StepStatus::Next;
}

template <typename U>
StepStatus exec_store(Hart& h, const Step& s) {
  const uint64_t va = h.x[s.rs1] + static_cast<uint64_t>(s.imm);
  const U v = static_cast<U>(h.x[s.rs2]);
  if ((va & (sizeof(U) - 1)) == 0) [[likely]] {
    uint8_t* p = data_ptr(h, va, AccessKind::Write, s);
    if (!p) return StepStatus::Trap;
    std::atomic_ref<U>(*reinterpret_cast<U*>(p)).store(v, std::memory_order_relaxed);
    return StepStatus::Next;
  }
  return misaligned_store(h, va, sizeof(U), s, v) ? StepStatus::Next : StepStatus::Trap;
}

enum class Amo { Swap, Add, Xor, And, Or, Min, Max, Minu, Maxu };

template <typename T, Amo kind>
StepStatus exec_amo(Hart& h, const Step& s) {
  using U = std::make_unsigned_t<T>;
  const uint64_t va = h.x[s.rs1];
  if (va & (sizeof(T) - 1)) return raise(h, ExceptionCause::exception(Exception::StoreMisaligned, va), s.pc);
  uint8_t* p = data_slow(h, va, AccessKind::Write, s, true);
  if (!p) return StepStatus::Trap;
  std::atomic_ref<U> ref(*reinterpret_cast<U*>(p));
  const U src = static_cast<U>(h.x[s.rs2]);
  U old;
  if constexpr (kind == Amo::Swap) {
    old = ref.exchange(src);
  } else if constexpr (kind == Amo::Add) {
    old = ref.fetch_add(src);
  } else if constexpr (kind == Amo::Xor) {
    old = ref.fetch_xor(src);
  } else if constexpr (kind == Amo::And) {
    old = ref.fetch_and(src);
  } else if constexpr (kind == Amo::Or) {
    old = ref.fetch_or(src);
  } else {
    old = ref.load();
    for (;;) {
      U next;
      if constexpr (kind == Amo::Min)
        next = static_cast<T>(old) < static_cast<T>(src) ? old : src;
      else if constexpr (kind == Amo::Max)
        next = static_cast<T>(old) > static_cast<T>(src) ? old : src;
      else if constexpr (kind == Amo::Minu)
        next = std::min(old, src);
      else
        next = std::max(old, src);
      if (ref.compare_exchange_weak(old, next)) break;
    }
  }
  h.x[s.rd] = extend(static_cast<T>(old));
  return StepStatus::Next;
}

template <typename T>
StepStatus exec_lr(Hart& h, const Step& s) {
  using U = std::make_unsigned_t<T>;
  const uint64_t va = h.x[s.rs1];
  if (va & (sizeof(T) - 1)) return raise(h, ExceptionCause::exception(Exception::LoadMisaligned, va), s.pc);
  uint8_t* p = data_slow(h, va, AccessKind::Read, s, true);
  if (!p) return StepStatus::Trap;
  const U v = std::atomic_ref<U>(*reinterpret_cast<U*>(p)).load();
  auto& r = h.cm.reservation;
  r.valid = true;
  r.paddr = h.memory_paddr(p);
  r.value = v;
  h.x[s.rd] = extend(static_cast<T>(v));
  return StepStatus::Next;
}

template <typename T>
StepStatus exec_sc(Hart& h, const Step& s) {
  using U = std::make_unsigned_t<T>;
  const uint64_t va = h.x[s.rs1];
  if (va & (sizeof(T) - 1)) return raise(h, ExceptionCause::exception(Exception::StoreMisaligned, va), s.pc);
  uint8_t* p = data_slow(h, va, AccessKind::Write, s, true);
  if (!p) return StepStatus::Trap;
  auto& r = h.cm.reservation;
  bool ok = r.valid && r.paddr == h.memory_paddr(p);
  if (ok) {
    U expected = static_cast<U>(r.value);
    ok = std::atomic_ref<U>(*reinterpret_cast<U*>(p)).compare_exchange_strong(expected, static_cast<U>(h.x[s.rs2]));
  }
  r.valid = false;
  h.x[s.rd] = ok ? 0 : 1;
  return StepStatus::Next;
}

inline uint64_t mulhu(uint64_t a, uint64_t b) {
  return static_cast<uint64_t>((static_cast<unsigned __int128>(a) * b) >> 64);
}
inline uint64_t mulh(int64_t a, int64_t b) {
  return static_cast<uint64_t>((static_cast<__int128>(a) * b) >> 64);
}
inline uint64_t mulhsu(int64_t a, uint64_t b) {
  return static_cast<uint64_t>((static_cast<__int128>(a) * static_cast<__int128>(b)) >> 64);
}

inline int64_t div_s(int64_t a, int64_t b) {
  if (b == 0) return -1;
  if (a == INT64_MIN && b == -1) return a;
  return a / b;
}
inline int64_t rem_s(int64_t a, int64_t b) {
  if (b == 0) return a;
  if (a == INT64_MIN && b == -1) return 0;
  return a % b;
}
inline int32_t div_w(int32_t a, int32_t b) {
  if (b == 0) return -1;
  if (a == INT32_MIN && b == -1) return a;
  return a / b;
}
inline int32_t rem_w(int32_t a, int32_t b) {
  if (b == 0) return a;
  if (a == INT32_MIN && b == -1) return 0;
  return a % b;
}

template <Op op>
StepStatus exec_csr(Hart& h, const Step& s) {
  constexpr bool imm_form = op == Op::CSRRWI || op == Op::CSRRSI || op == Op::CSRRCI;
  constexpr bool swap = op == Op::CSRRW || op == Op::CSRRWI;
  const uint64_t src = imm_form ? static_cast<uint64_t>(s.imm) : h.x[s.rs1];
  const bool writes = swap || (imm_form ? s.imm != 0 : s.rs1 != 0);
  if (writes && CsrAddress{s.csr}.read_only()) return illegal(h, s);
  uint64_t old = 0;
  if (!sys::csr_read(h, s.csr, old)) return illegal(h, s);
  if (writes) {
    uint64_t next;
    if constexpr (swap)
      next = src;
    else if constexpr (op == Op::CSRRS || op == Op::CSRRSI)
      next = old | src;
    else
      next = old & ~src;
    if (!sys::csr_write(h, s.csr, next)) return illegal(h, s);
  }
  h.x[s.rd] = old;
  return StepStatus::Next;
}

template <Op op>
StepStatus exec(Hart& h, const Step& s) {
  uint64_t* x = h.x;
  const uint64_t a = x[s.rs1];
  const uint64_t b = x[s.rs2];
  const uint64_t imm = static_cast<uint64_t>(s.imm);
  using enum Op;
  if constexpr (op == LUI) {
    x[s.rd] = imm;
  } else if constexpr (op == AUIPC) {
    x[s.rd] = s.pc + imm;
  } else if constexpr (op == JAL) {
    x[s.rd] = s.pc + s.length;
    h.pc = s.pc + imm;
    return StepStatus::Jump;
  } else if constexpr (op == JALR) {
    const uint64_t target = (a + imm) & ~uint64_t(1);
    x[s.rd] = s.pc + s.length;
    h.pc = target;
    return StepStatus::Jump;
  } else if constexpr (op == BEQ || op == BNE || op == BLT || op == BGE || op == BLTU || op == BGEU) {
    bool taken;
    if constexpr (op == BEQ) taken = a == b;
    if constexpr (op == BNE) taken = a != b;
    if constexpr (op == BLT) taken = static_cast<int64_t>(a) < static_cast<int64_t>(b);
    if constexpr (op == BGE) taken = static_cast<int64_t>(a) >= static_cast<int64_t>(b);
    if constexpr (op == BLTU) taken = a < b;
    if constexpr (op == BGEU) taken = a >= b;
    if (taken) {
      h.pc = s.pc + imm;
      return StepStatus::Jump;
    }
  } else if constexpr (op == LB) {
    return exec_load<int8_t>(h, s);
  } else if constexpr (op == LH) {
    return exec_load<int16_t>(h, s);
  } else if constexpr (op == LW) {
    return exec_load<int32_t>(h, s);
  } else if constexpr (op == LD) {
    return exec_load<int64_t>(h, s);
  } else if constexpr (op == LBU) {
    return exec_load<uint8_t>(h, s);
  } else if constexpr (op == LHU) {
    return exec_load<uint16_t>(h, s);
  } else if constexpr (op == LWU) {
    return exec_load<uint32_t>(h, s);
  } else if constexpr (op == SB) {
    return exec_store<uint8_t>(h, s);
  } else if constexpr (op == SH) {
    return exec_store<uint16_t>(h, s);
  } else if constexpr (op == SW) {
    return exec_store<uint32_t>(h, s);
  } else if constexpr (op == SD) {
    return exec_store<uint64_t>(h, s);
  } else if constexpr (op == ADDI) {
    x[s.rd] = a + imm;
  } else if constexpr (op == SLTI) {
    x[s.rd] = static_cast<int64_t>(a) < s.imm;
  } else if constexpr (op == SLTIU) {
    x[s.rd] = a < imm;
  } else if constexpr (op == XORI) {
    x[s.rd] = a ^ imm;
  } else if constexpr (op == ORI) {
    x[s.rd] = a | imm;
  } else if constexpr (op == ANDI) {
    x[s.rd] = a & imm;
  } else if constexpr (op == SLLI) {
    x[s.rd] = a << (imm & 63);
  } else if constexpr (op == SRLI) {
    x[s.rd] = a >> (imm & 63);
  } else if constexpr (op == SRAI) {
    x[s.rd] = static_cast<uint64_t>(static_cast<int64_t>(a) >> (imm & 63));
  } else if constexpr (op == ADD) {
    x[s.rd] = a + b;
  } else if constexpr (op == SUB) {
    x[s.rd] = a - b;
  } else if constexpr (op == SLL) {
    x[s.rd] = a << (b & 63);
  } else if constexpr (op == SLT) {
    x[s.rd] = static_cast<int64_t>(a) < static_cast<int64_t>(b);
  } else if constexpr (op == SLTU) {
    x[s.rd] = a < b;
  } else if constexpr (op == XOR) {
    x[s.rd] = a ^ b;
  } else if constexpr (op == SRL) {
    x[s.rd] = a >> (b & 63);
  } else if constexpr (op == SRA) {
    x[s.rd] = static_cast<uint64_t>(static_cast<int64_t>(a) >> (b & 63));
  } else if constexpr (op == OR) {
    x[s.rd] = a | b;
  } else if constexpr (op == AND) {
    x[s.rd] = a & b;
  } else if constexpr (op == ADDIW) {
    x[s.rd] = sext32(a + imm);
  } else if constexpr (op == SLLIW) {
    x[s.rd] = sext32(static_cast<uint32_t>(a) << (imm & 31));
  } else if constexpr (op == SRLIW) {
    x[s.rd] = sext32(static_cast<uint32_t>(a) >> (imm & 31));
  } else if constexpr (op == SRAIW) {
    x[s.rd] = static_cast<uint64_t>(static_cast<int64_t>(static_cast<int32_t>(a) >> (imm & 31)));
  } else if constexpr (op == ADDW) {
    x[s.rd] = sext32(a + b);
  } else if constexpr (op == SUBW) {
    x[s.rd] = sext32(a - b);
  } else if constexpr (op == SLLW) {
    x[s.rd] = sext32(static_cast<uint32_t>(a) << (b & 31));
  } else if constexpr (op == SRLW) {
    x[s.rd] = sext32(static_cast<uint32_t>(a) >> (b & 31));
  } else if constexpr (op == SRAW) {
    x[s.rd] = static_cast<uint64_t>(static_cast<int64_t>(static_cast<int32_t>(a) >> (b & 31)));
  } else if constexpr (op == FENCE) {
  } else if constexpr (op == ECALL) {
    if (sys::ecall(h, s.pc) == sys::EcallResult::Emulated) return StepStatus::Next;
    const Exception e = h.priv == Privilege::User         ? Exception::EcallFromU
                        : h.priv == Privilege::Supervisor ? Exception::EcallFromS
                                                          : Exception::EcallFromM;
    return raise(h, ExceptionCause::exception(e), s.pc);
  } else if constexpr (op == EBREAK) {
    return raise(h, ExceptionCause::exception(Exception::Breakpoint, s.pc), s.pc);
  } else if constexpr (op == FENCE_I) {
    h.deferred |= deferred::kFlushCode;
  } else if constexpr (op == CSRRW || op == CSRRS || op == CSRRC || op == CSRRWI || op == CSRRSI || op == CSRRCI) {
    return exec_csr<op>(h, s);
  } else if constexpr (op == MUL) {
    x[s.rd] = a * b;
  } else if constexpr (op == MULH) {
    x[s.rd] = mulh(static_cast<int64_t>(a), static_cast<int64_t>(b));
  } else if constexpr (op == MULHSU) {
    x[s.rd] = mulhsu(static_cast<int64_t>(a), b);
  } else if constexpr (op == MULHU) {
    x[s.rd] = mulhu(a, b);
  } else if constexpr (op == DIV) {
    x[s.rd] = static_cast<uint64_t>(div_s(static_cast<int64_t>(a), static_cast<int64_t>(b)));
  } else if constexpr (op == DIVU) {
    x[s.rd] = b == 0 ? ~uint64_t(0) : a / b;
  } else if constexpr (op == REM) {
    x[s.rd] = static_cast<uint64_t>(rem_s(static_cast<int64_t>(a), static_cast<int64_t>(b)));
  } else if constexpr (op == REMU) {
    x[s.rd] = b == 0 ? a : a % b;
  } else if constexpr (op == MULW) {
    x[s.rd] = sext32(a * b);
  } else if constexpr (op == DIVW) {
    x[s.rd] = extend(div_w(static_cast<int32_t>(a), static_cast<int32_t>(b)));
  } else if constexpr (op == DIVUW) {
    const uint32_t bw = static_cast<uint32_t>(b);
    x[s.rd] = sext32(bw == 0 ? ~uint32_t(0) : static_cast<uint32_t>(a) / bw);
  } else if constexpr (op == REMW) {
    x[s.rd] = extend(rem_w(static_cast<int32_t>(a), static_cast<int32_t>(b)));
  } else if constexpr (op == REMUW) {
    const uint32_t bw = static_cast<uint32_t>(b);
    x[s.rd] = sext32(bw == 0 ? static_cast<uint32_t>(a) : static_cast<uint32_t>(a) % bw);
  } else if constexpr (op == LR_W) {
    return exec_lr<int32_t>(h, s);
  } else if constexpr (op == LR_D) {
    return exec_lr<int64_t>(h, s);
  } else if constexpr (op == SC_W) {
    return exec_sc<int32_t>(h, s);
  } else if constexpr (op == SC_D) {
    return exec_sc<int64_t>(h, s);
  } else if constexpr (op == AMOSWAP_W) {
    return exec_amo<int32_t, Amo::Swap>(h, s);
  } else if constexpr (op == AMOADD_W) {
    return exec_amo<int32_t, Amo::Add>(h, s);
  } else if constexpr (op == AMOXOR_W) {
    return exec_amo<int32_t, Amo::Xor>(h, s);
  } else if constexpr (op == AMOAND_W) {
    return exec_amo<int32_t, Amo::And>(h, s);
  } else if constexpr (op == AMOOR_W) {
    return exec_amo<int32_t, Amo::Or>(h, s);
  } else if constexpr (op == AMOMIN_W) {
    return exec_amo<int32_t, Amo::Min>(h, s);
  } else if constexpr (op == AMOMAX_W) {
    return exec_amo<int32_t, Amo::Max>(h, s);
  } else if constexpr (op == AMOMINU_W) {
    return exec_amo<int32_t, Amo::Minu>(h, s);
  } else if constexpr (op == AMOMAXU_W) {
    return exec_amo<int32_t, Amo::Maxu>(h, s);
  } else if constexpr (op == AMOSWAP_D) {
    return exec_amo<int64_t, Amo::Swap>(h, s);
  } else if constexpr (op == AMOADD_D) {
    return exec_amo<int64_t, Amo::Add>(h, s);
  } else if constexpr (op == AMOXOR_D) {
    return exec_amo<int64_t, Amo::Xor>(h, s);
  } else if constexpr (op == AMOAND_D) {
    return exec_amo<int64_t, Amo::And>(h, s);
  } else if constexpr (op == AMOOR_D) {
    return exec_amo<int64_t, Amo::Or>(h, s);
  } else if constexpr (op == AMOMIN_D) {
    return exec_amo<int64_t, Amo::Min>(h, s);
  } else if constexpr (op == AMOMAX_D) {
    return exec_amo<int64_t, Amo::Max>(h, s);
  } else if constexpr (op == AMOMINU_D) {
    return exec_amo<int64_t, Amo::Minu>(h, s);
  } else if constexpr (op == AMOMAXU_D) {
    return exec_amo<int64_t, Amo::Maxu>(h, s);
  } else if constexpr (op == MRET || op == SRET) {
    const auto target = op == MRET ? sys::mret(h) : sys::sret(h);
    if (!target) return illegal(h, s);
    h.pc = *target;
    return StepStatus::Jump;
  } else if constexpr (op == WFI) {
    if (h.priv == Privilege::User || (h.priv == Privilege::Supervisor && (h.csr.mstatus & mstatus::kTw)))
      return illegal(h, s);
    if ((h.mip.load() & h.csr.mie) == 0) {
      ++h.stats.wfi_waits;
      h.wait.store(WaitState::Wfi);
    }
  } else if constexpr (op == SFENCE_VMA) {
    if (h.priv == Privilege::User || (h.priv == Privilege::Supervisor && (h.csr.mstatus & mstatus::kTvm)))
      return illegal(h, s);
    h.memsys.flush_translations(h.id());
    if (s.rs1 == 0) {
      h.deferred |= deferred::kFlushCode;
    } else {
      h.deferred |= deferred::kFlushCodePage;
      h.deferred_page = a & ~uint64_t(0xfff);
    }
  }
  return StepStatus::Next;
}

template <size_t... I>
constexpr std::array<StepFn, kOpCount> make_table(std::index_sequence<I...>) {
  return {&exec<static_cast<Op>(I)>...};
}

constexpr auto kStepTable = make_table(std::make_index_sequence<kOpCount>{});

}  // namespace

StepFn step_for(Op op) { return kStepTable[static_cast<size_t>(op)]; }

StepStatus step_fetch(Hart& h, const Step& s) {
  ++h.stats.ifetch_accesses;
  if (h.cm.l0i.lookup_read(s.aux)) [[likely]] {
    ++h.cm.stats.l0i_hits;
    return StepStatus::Next;
  }
  h.ctx.flush();
  const mem::AccessOutcome out = h.memsys.fetch_access(h.id(), s.aux, h.fetch_regime);
  h.ctx.accumulate(out.latency);
  if (!out.ok) {
    ExceptionCause c = out.fault;
    c.tval = std::max(s.aux, s.pc);
    return raise(h, c, s.pc);
  }
  return StepStatus::Next;
}

StepStatus step_trap(Hart& h, const Step& s) {
  return raise(h, ExceptionCause{s.aux, static_cast<uint64_t>(s.imm)}, s.pc);
}

}  // namespace rvdbt::xlat
