#include <cinttypes>
#include <cstdio>
#include <string>

#include "rvdbt/hart.hpp"
#include "rvdbt/machine.hpp"
#include "rvdbt/xlat.hpp"

namespace rvdbt::xlat {

using mem::AccessKind;

uint64_t Block::static_cycles() const {
  uint64_t n = 0;
  for (const auto& s : steps) n += s.cycles;
  return n;
}

Block* CodeCache::find(const BlockKey& key) {
  ++stats.lookups;
  auto it = map_.find(key);
  if (it == map_.end()) return nullptr;
  ++stats.hits;
  return it->second.get();
}

Block* CodeCache::insert(std::unique_ptr<Block> block) {
  block->epoch = epoch_;
  Block* raw = block.get();
  auto [it, inserted] = map_.try_emplace(block->key, nullptr);
  if (!inserted) {
    it->second->valid = false;
    graveyard_.push_back(std::move(it->second));
  }
  it->second = std::move(block);
  return raw;
}

void CodeCache::flush() {
  ++stats.flushes;
  ++epoch_;
  map_.clear();
  graveyard_.clear();
}

void CodeCache::flush_page(uint64_t vpage) {
  ++stats.partial_flushes;
  for (auto it = map_.begin(); it != map_.end();) {
    if ((it->first.vpc & ~uint64_t(0xfff)) == vpage) {
      it->second->valid = false;
      graveyard_.push_back(std::move(it->second));
      it = map_.erase(it);
    } else {
      ++it;
    }
  }
}

uint64_t context_key(Privilege priv, uint64_t satp) {
  const uint64_t mode = mem::satp::mode(satp);
  uint64_t key = static_cast<uint64_t>(priv);
  if (priv != Privilege::Machine && mode == mem::satp::kModeSv39)
    key |= (mode << 4) | (mem::satp::asid(satp) << 8) | (mem::satp::ppn(satp) << 24);
  return key;
}

namespace {

bool fetch16(Hart& h, uint64_t va, uint16_t& out, ExceptionCause& fault) {
  const auto pa = h.memsys.translate_functional(h.fetch_regime, va, AccessKind::Fetch, &fault);
  if (!pa) return false;
  out = h.memsys.memory().read<uint16_t>(*pa);
  return true;
}

bool ends_block(const DecodedInstruction& d) {
  if (d.sync_class == SyncClass::ControlFlow) return true;
  switch (d.op) {
    case Op::FENCE_I:
    case Op::SFENCE_VMA:
    case Op::WFI:
      return true;
    case Op::CSRRW:
    case Op::CSRRS:
    case Op::CSRRC:
    case Op::CSRRWI:
    case Op::CSRRSI:
    case Op::CSRRCI:
      return csr_may_write(d);
    default:
      return false;
  }
}

void emit_fetch(Block& b, uint64_t line_va, uint64_t pc) {
  Step s;
  s.fn = step_fetch;
  s.pc = pc;
  s.aux = line_va;
  s.retires = 0;
  s.length = 0;
  b.steps.push_back(s);
  ++b.fetch_steps;
}

void emit_trap(Block& b, const ExceptionCause& cause, uint64_t pc) {
  Step s;
  s.fn = step_trap;
  s.pc = pc;
  s.aux = cause.code;
  s.imm = static_cast<int64_t>(cause.tval);
  s.retires = 0;
  s.length = 0;
  s.sync_before = true;
  b.steps.push_back(s);
}

void build(Hart& h, Block& b) {
  b.steps.clear();
  b.instructions = 0;
  b.fetch_steps = 0;
  b.entry_penalty = 0;
  b.guard.reset();
  b.links[0] = {};
  b.links[1] = {};

  pipeline::PipelineModel& model = *h.model;
  model.begin_block();
  pipeline::TranslationContext tc;
  const unsigned line_shift = h.cm.l0i.line_shift();
  uint64_t pc = b.key.vpc;
  uint64_t last_line = ~uint64_t(0);

  for (;;) {
    if ((pc >> line_shift) != last_line) {
      last_line = pc >> line_shift;
      emit_fetch(b, last_line << line_shift, pc);
    }
    ExceptionCause fault;
    uint16_t lo;
    if (!fetch16(h, pc, lo, fault)) {
      fault.tval = pc;
      emit_trap(b, fault, pc);
      break;
    }
    uint32_t raw = lo;
    const unsigned len = parcel_length(lo);
    bool straddle = false;
    if (len == 4) {
      const uint64_t hi_va = pc + 2;
      straddle = (hi_va & 0xfff) == 0;
      if (straddle) {
        // A straddling instruction always gets a block of its own.
        if (b.instructions > 0) {
          while (b.steps.back().fn == step_fetch) {
            b.steps.pop_back();
            --b.fetch_steps;
          }
          break;
        }
      }
      if ((hi_va >> line_shift) != last_line) {
        last_line = hi_va >> line_shift;
        emit_fetch(b, last_line << line_shift, pc);
      }
      uint16_t hi;
      if (!fetch16(h, hi_va, hi, fault)) {
        if (straddle) b.guard = CrossPageGuard{hi_va, 0, true};
        fault.tval = hi_va;
        emit_trap(b, fault, pc);
        break;
      }
      if (straddle) b.guard = CrossPageGuard{hi_va, hi, false};
      raw |= uint32_t(hi) << 16;
    }

    ++h.code.stats.decodes;
    const auto d = decode(raw);
    if (!d) {
      emit_trap(b, ExceptionCause::exception(Exception::IllegalInstruction, len == 2 ? (raw & 0xffff) : raw), pc);
      break;
    }

    Step s;
    s.fn = step_for(d->op);
    s.pc = pc;
    s.imm = d->imm;
    s.rd = d->rd == 0 ? 32 : d->rd;
    s.rs1 = d->rs1;
    s.rs2 = d->rs2;
    s.length = static_cast<uint8_t>(len);
    s.csr = d->csr;
    s.raw = raw;
    s.op = d->op;
    const SyncClass sc = d->sync_class;
    const bool visible = sc == SyncClass::MemoryOp || sc == SyncClass::ControlRegOp;
    const bool system = d->op == Op::ECALL || d->op == Op::EBREAK || d->op == Op::MRET || d->op == Op::SRET;
    s.sync_before = visible || system;
    s.sync_after = visible;

    const OpInfo& info = op_info(d->op);
    const bool jump = info.is_jump || d->op == Op::MRET || d->op == Op::SRET;
    tc.pc = pc;
    tc.index = b.instructions;
    if (info.is_branch || jump) {
      tc.cycles = 0;
      model.after_taken_branch(tc, *d, d->compressed());
      s.taken_cycles = static_cast<uint32_t>(tc.cycles);
    }
    if (!jump) {
      tc.cycles = 0;
      model.after_instruction(tc, *d, d->compressed());
      s.cycles = static_cast<uint32_t>(tc.cycles);
    }
    if (b.instructions == 0) b.entry_penalty = model.taken_entry_penalty(*d, pc);
    b.steps.push_back(s);
    ++b.instructions;
    pc += len;

    if (ends_block(*d) || straddle) break;
    if ((pc & 0xfff) == 0) break;
    if (b.instructions >= kMaxBlockInstructions) break;
  }
  b.end_vpc = pc;
  if (h.machine.config().dump_blocks) std::fputs(dump_block(b).c_str(), stderr);
}

}  // namespace

std::unique_ptr<Block> translate(Hart& h, uint64_t vpc) {
  auto b = std::make_unique<Block>();
  b->key = {vpc, h.context};
  build(h, *b);
  ++h.code.stats.translations;
  return b;
}

void retranslate(Hart& h, Block& block) {
  build(h, block);
  ++h.code.stats.retranslations;
}

bool guard_holds(Hart& h, const Block& block) {
  const CrossPageGuard& g = *block.guard;
  if (const uint64_t host = h.cm.l0i.lookup_read(g.vaddr))
    return !g.expect_fault && *reinterpret_cast<const uint16_t*>(host) == g.expected;
  uint16_t v;
  ExceptionCause fault;
  if (!fetch16(h, g.vaddr, v, fault)) return g.expect_fault;
  return !g.expect_fault && v == g.expected;
}

std::string dump_block(const Block& b) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "block vpc=0x%" PRIx64 " ctx=0x%" PRIx64 " insns=%u end=0x%" PRIx64 " entry_penalty=%u%s\n",
                b.key.vpc, b.key.context, b.instructions, b.end_vpc, b.entry_penalty,
                b.guard ? " guarded" : "");
  out += line;
  for (const auto& s : b.steps) {
    if (s.fn == step_fetch) {
      std::snprintf(line, sizeof line, "  %016" PRIx64 "  ifetch line 0x%" PRIx64 "\n", s.pc, s.aux);
    } else if (s.fn == step_trap) {
      std::snprintf(line, sizeof line, "  %016" PRIx64 "  trap cause=%" PRIu64 " tval=0x%" PRIx64 "\n", s.pc, s.aux,
                    static_cast<uint64_t>(s.imm));
    } else {
      const auto d = decode(s.raw);
      const std::string text = d ? disassemble(*d) : "?";
      std::snprintf(line, sizeof line, "  %016" PRIx64 "  %-32s cycles=%u taken=%u%s%s\n", s.pc, text.c_str(),
                    s.cycles, s.taken_cycles, s.sync_before ? " sync<" : "", s.sync_after ? " sync>" : "");
    }
    out += line;
  }
  return out;
}

}  // namespace rvdbt::xlat
