#include "rvdbt/hart.hpp"
#include "rvdbt/machine.hpp"
#include "rvdbt/sys.hpp"
#include "rvdbt/xlat.hpp"

namespace rvdbt::xlat {

namespace {

Block* lookup_or_translate(Hart& h, uint64_t vpc) {
  const BlockKey key{vpc, h.context};
  if (Block* b = h.code.find(key)) return b;
  return h.code.insert(translate(h, vpc));
}

Block* follow(Hart& h, Block& b, int edge) {
  const Link& l = b.links[edge];
  if (!l.target || l.epoch != h.code.epoch() || !l.target->valid) return nullptr;
  if (l.target->key.vpc != h.pc || l.target->key.context != h.context) return nullptr;
  // Across pages the link is only as good as the mapping it was made
  // under; the L0 I entry is dropped whenever that mapping goes away.
  if (l.cross_page && h.cm.l0i.lookup_read(h.pc) != l.host) return nullptr;
  return l.target;
}

void install(Hart& h, Block& b, int edge, Block* target) {
  Link& l = b.links[edge];
  const uint64_t last_pc = b.end_vpc - 1;
  const bool cross = (last_pc >> 12) != (target->key.vpc >> 12) || (b.key.vpc >> 12) != (target->key.vpc >> 12);
  uint64_t host = 0;
  if (cross) {
    host = h.cm.l0i.lookup_read(target->key.vpc);
    if (!host) return;
  }
  l.target = target;
  l.epoch = h.code.epoch();
  l.cross_page = cross;
  l.host = host;
  ++h.code.stats.links_installed;
}

}  // namespace

void run_blocks(Hart& h) {
  Machine& m = h.machine;
  const SimConfig& cfg = m.config();
  Block* b = lookup_or_translate(h, h.pc);
  ++h.stats.dispatches;
  for (;;) {
    if (b->guard && !guard_holds(h, *b)) retranslate(h, *b);
    ++b->executions;
    ++h.stats.blocks_executed;
    if (h.entered_taken) h.ctx.accumulate(b->entry_penalty);

    const uint64_t retired_before = h.minstret;
    StepStatus st = StepStatus::Next;
    for (const Step& s : b->steps) {
      if (s.sync_before) h.ctx.flush();
      st = s.fn(h, s);
      if (st == StepStatus::Next) [[likely]] {
        h.ctx.accumulate(s.cycles);
        h.minstret += s.retires;
        if (s.sync_after) h.ctx.flush();
        continue;
      }
      if (st == StepStatus::Jump) {
        h.ctx.accumulate(s.taken_cycles);
        h.minstret += s.retires;
      }
      break;
    }
    int edge;
    if (st == StepStatus::Next) {
      h.pc = b->end_vpc;
      edge = 0;
    } else {
      edge = st == StepStatus::Jump ? 1 : -1;
    }

    h.ctx.flush();
    if (!h.model->tracks_cycles()) h.ctx.yield_cycles(1);
    if (h.minstret != retired_before) h.consecutive_traps = 0;

    const WaitState w = h.wait.load();
    if (w == WaitState::Wfi && (h.mip.load() & h.csr.mie)) h.wait.store(WaitState::None);
    if (w != WaitState::Stopped && !m.stop_requested()) {
      if (const auto irq = sys::check_interrupt(h)) {
        h.wait.store(WaitState::None);
        ++h.stats.interrupts;
        sys::take_trap(h, *irq, h.pc);
        edge = -1;
      }
    }

    if (h.deferred) {
      if (h.deferred & deferred::kFlushCode)
        h.code.flush();
      else if (h.deferred & deferred::kFlushCodePage)
        h.code.flush_page(h.deferred_page);
      h.deferred = 0;
      b = nullptr;
    }

    if (cfg.max_insns && h.minstret >= cfg.max_insns)
      m.stop(0, StopReason::InsnLimit, "instruction limit reached on core " + std::to_string(h.id()));
    if (cfg.max_cycles && h.ctx.local_clock >= cfg.max_cycles)
      m.stop(0, StopReason::CycleLimit, "cycle limit reached on core " + std::to_string(h.id()));

    h.entered_taken = edge != 0;
    if (m.should_return() || h.wait.load() != WaitState::None) return;

    Block* next = nullptr;
    if (b && edge >= 0) next = follow(h, *b, edge);
    if (next) {
      ++h.stats.chained;
    } else {
      next = lookup_or_translate(h, h.pc);
      ++h.stats.dispatches;
      if (b && edge >= 0 && b->valid) install(h, *b, edge, next);
    }
    b = next;
  }
}

}  // namespace rvdbt::xlat
