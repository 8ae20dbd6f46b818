#include "rvdbt/mem/memory_system.hpp"

#include <bit>
#include <stdexcept>

namespace rvdbt::mem {

std::string_view memory_model_name(MemoryModel m) {
  switch (m) {
    case MemoryModel::Atomic: return "atomic";
    case MemoryModel::Tlb: return "tlb";
    case MemoryModel::Cache: return "cache";
    default: return "mesi";
  }
}

std::optional<MemoryModel> memory_model_from_name(std::string_view name) {
  if (name == "atomic") return MemoryModel::Atomic;
  if (name == "tlb") return MemoryModel::Tlb;
  if (name == "cache") return MemoryModel::Cache;
  if (name == "mesi") return MemoryModel::Mesi;
  return std::nullopt;
}

std::optional<MemoryModel> memory_model_from_id(unsigned id) {
  if (id > 3) return std::nullopt;
  return static_cast<MemoryModel>(id);
}

MemorySystem::MemorySystem(GuestMemory& memory, unsigned cores, const MemoryParams& params)
    : memory_(memory), params_(params) {
  if (cores == 0 || cores > 64) throw std::invalid_argument("1..64 cores supported");
  if (!std::has_single_bit(params.l0_entries)) throw std::invalid_argument("L0 entries must be a power of two");
  for (unsigned c = 0; c < cores; ++c) cores_.push_back(std::make_unique<CoreMem>(params_, line_size_));
}

bool MemorySystem::valid_combination(MemoryModel model, unsigned line_size) const {
  if (line_size != 64 && line_size != 4096) return false;
  if (model == MemoryModel::Cache || model == MemoryModel::Mesi) return line_size == params_.l2.line;
  return true;
}

void MemorySystem::build_caches() {
  caches_.reset();
  if (model_ == MemoryModel::Cache || model_ == MemoryModel::Mesi)
    caches_ = std::make_unique<CacheHierarchy>(cores(), params_.l1d, params_.l1i, params_.l2, params_.latencies,
                                               model_ == MemoryModel::Mesi, this);
}

void MemorySystem::configure(MemoryModel model, unsigned line_size, bool reset) {
  if (!valid_combination(model, line_size))
    throw std::invalid_argument("line size " + std::to_string(line_size) + " is not valid for memory model " +
                                std::string(memory_model_name(model)));
  const bool cold = model != model_ || line_size != line_size_ || (!caches_ && model >= MemoryModel::Cache);
  if (cold) {
    if (caches_) caches_->drain();
    for (auto& cm : cores_) {
      cm->dtlb.flush();
      cm->itlb.flush();
    }
    model_ = model;
    line_size_ = line_size;
    build_caches();
  }
  for (auto& cm : cores_) {
    cm->l0d.configure(params_.l0_entries, line_size_);
    cm->l0i.configure(params_.l0_entries, line_size_);
    cm->reservation.valid = false;
  }
  if (reset) reset_stats();
}

MemorySystem::Translation MemorySystem::translate(unsigned c, uint64_t vaddr, AccessKind kind,
                                                  const TranslationRegime& regime) {
  Translation t;
  const bool translated = regime.translated();
  if (model_ == MemoryModel::Atomic) {
    const WalkResult w = sv39_walk(memory_, regime, vaddr, kind, {params_.ad, true});
    if (!w.ok) {
      t.fault = w.fault;
      return t;
    }
    t.ok = true;
    t.paddr = (w.mapping.ppn << kPageShift) | (vaddr & (kPageSize - 1));
    t.flags = w.mapping.flags;
    return t;
  }

  CoreMem& cm = *cores_[c];
  Tlb& tlb = kind == AccessKind::Fetch ? cm.itlb : cm.dtlb;
  const uint32_t asid = translated ? regime.asid() : kBareAsid;
  const uint64_t vpn = vaddr >> kPageShift;
  if (TlbEntry* e = tlb.lookup(vpn, asid)) {
    const bool permitted = !translated || leaf_permits(e->flags, kind, regime);
    const bool needs_dirty = kind == AccessKind::Write && !(e->flags & pte::kD);
    if (permitted && !needs_dirty) {
      ++tlb.stats.hits;
      t.ok = true;
      t.paddr = (e->ppn << kPageShift) | (vaddr & (kPageSize - 1));
      t.flags = e->flags;
      return t;
    }
  }
  ++tlb.stats.misses;
  const WalkResult w = sv39_walk(memory_, regime, vaddr, kind, {params_.ad, true});
  if (translated) {
    ++cm.stats.walks;
    cm.stats.walk_levels += w.mapping.levels;
    t.latency += params_.walk_latency_per_level * (w.ok ? w.mapping.levels : 1);
  }
  if (!w.ok) {
    t.fault = w.fault;
    return t;
  }
  TlbEntry entry;
  entry.vpn = vpn;
  entry.ppn = w.mapping.ppn;
  entry.flags = translated ? w.mapping.flags : static_cast<uint8_t>(w.mapping.flags & ~pte::kG);
  entry.asid = asid;
  entry.page_size = w.mapping.page_size;
  if (auto evicted = tlb.insert(entry)) {
    // Inclusion: nothing in the L0 may outlive its TLB entry.
    if (kind == AccessKind::Fetch)
      cm.l0i.invalidate_vrange(evicted->vpn << kPageShift, kPageSize);
    else
      cm.l0d.invalidate_vrange(evicted->vpn << kPageShift, kPageSize);
  }
  t.ok = true;
  t.paddr = (w.mapping.ppn << kPageShift) | (vaddr & (kPageSize - 1));
  t.flags = entry.flags;
  return t;
}

AccessOutcome MemorySystem::data_access(unsigned c, uint64_t vaddr, AccessKind kind, const TranslationRegime& regime,
                                        bool exclusive) {
  AccessOutcome out;
  CoreMem& cm = *cores_[c];
  ++cm.stats.l0d_misses;
  const Translation t = translate(c, vaddr, kind, regime);
  out.latency = t.latency;
  if (!t.ok) {
    ++cm.stats.faults;
    out.fault = t.fault;
    return out;
  }
  if (!memory_.contains(t.paddr)) {
    ++cm.stats.faults;
    out.fault = access_fault(kind, vaddr);
    return out;
  }
  bool writable = (t.flags & pte::kW) && (t.flags & pte::kD);
  if (caches_) {
    const CacheAccessResult r = caches_->access_data(c, t.paddr >> caches_->line_shift(), kind == AccessKind::Write,
                                                     exclusive, cm.l0d.vtag(vaddr));
    out.latency += r.latency;
    writable = writable && r.state == LineState::M;
  }
  const uint64_t line_mask = line_size_ - 1;
  cm.l0d.fill(vaddr, reinterpret_cast<uint64_t>(memory_.host(t.paddr & ~line_mask)), !writable);
  out.ok = true;
  out.paddr = t.paddr;
  out.host = memory_.host(t.paddr);
  return out;
}

AccessOutcome MemorySystem::fetch_access(unsigned c, uint64_t vaddr, const TranslationRegime& regime) {
  AccessOutcome out;
  CoreMem& cm = *cores_[c];
  ++cm.stats.l0i_misses;
  const Translation t = translate(c, vaddr, AccessKind::Fetch, regime);
  out.latency = t.latency;
  if (!t.ok) {
    ++cm.stats.faults;
    out.fault = t.fault;
    return out;
  }
  if (!memory_.contains(t.paddr)) {
    ++cm.stats.faults;
    out.fault = access_fault(AccessKind::Fetch, vaddr);
    return out;
  }
  if (caches_) {
    const CacheAccessResult r = caches_->access_inst(c, t.paddr >> caches_->line_shift(), cm.l0i.vtag(vaddr));
    out.latency += r.latency;
  }
  const uint64_t line_mask = line_size_ - 1;
  cm.l0i.fill(vaddr, reinterpret_cast<uint64_t>(memory_.host(t.paddr & ~line_mask)));
  out.ok = true;
  out.paddr = t.paddr;
  out.host = memory_.host(t.paddr);
  return out;
}

ProbeResult MemorySystem::probe(unsigned c, uint64_t vaddr, AccessKind kind, const TranslationRegime& regime) const {
  ProbeResult p;
  const bool translated = regime.translated();
  bool tlb_hit = false;
  if (model_ != MemoryModel::Atomic) {
    const CoreMem& cm = *cores_[c];
    const Tlb& tlb = kind == AccessKind::Fetch ? cm.itlb : cm.dtlb;
    const TlbEntry* e = tlb.find(vaddr >> kPageShift, translated ? regime.asid() : kBareAsid);
    if (e && (!translated || leaf_permits(e->flags, kind, regime))) {
      tlb_hit = true;
      p.ok = true;
      p.paddr = (e->ppn << kPageShift) | (vaddr & (kPageSize - 1));
      p.flags = e->flags;
    }
  }
  if (!p.ok) {
    const WalkResult w = sv39_walk(const_cast<GuestMemory&>(memory_), regime, vaddr, kind, {params_.ad, false});
    if (!w.ok) {
      p.fault = w.fault;
      return p;
    }
    p.ok = true;
    p.paddr = (w.mapping.ppn << kPageShift) | (vaddr & (kPageSize - 1));
    p.flags = w.mapping.flags;
  }
  if (!memory_.contains(p.paddr)) {
    p.ok = false;
    p.fault = access_fault(kind, vaddr);
    return p;
  }
  p.model_hit = model_ == MemoryModel::Atomic || tlb_hit;
  p.writable = (p.flags & pte::kW) && (p.flags & pte::kD);
  if (caches_) {
    const uint64_t line = p.paddr >> caches_->line_shift();
    if (kind == AccessKind::Fetch) {
      if (!caches_->inst_present(c, line)) p.model_hit = false;
    } else {
      const LineState s = caches_->data_state(c, line);
      if (s == LineState::I) p.model_hit = false;
      p.writable = p.writable && s == LineState::M;
    }
  }
  return p;
}

std::optional<uint64_t> MemorySystem::translate_functional(const TranslationRegime& regime, uint64_t vaddr,
                                                           AccessKind kind, ExceptionCause* fault) const {
  const WalkResult w = sv39_walk(const_cast<GuestMemory&>(memory_), regime, vaddr, kind, {params_.ad, false});
  if (!w.ok) {
    if (fault) *fault = w.fault;
    return std::nullopt;
  }
  const uint64_t paddr = (w.mapping.ppn << kPageShift) | (vaddr & (kPageSize - 1));
  if (!memory_.contains(paddr)) {
    if (fault) *fault = access_fault(kind, vaddr);
    return std::nullopt;
  }
  return paddr;
}

bool MemorySystem::shadow_check(unsigned c, uint64_t vaddr, AccessKind kind, const TranslationRegime& regime,
                                uint64_t host) {
  CoreMem& cm = *cores_[c];
  ++cm.stats.shadow_checks;
  const ProbeResult p = probe(c, vaddr, kind, regime);
  const bool good = p.ok && p.model_hit && reinterpret_cast<uint64_t>(memory_.host(p.paddr)) == host &&
                    (kind != AccessKind::Write || p.writable);
  if (!good) ++cm.stats.shadow_divergences;
  return good;
}

void MemorySystem::flush_l0(unsigned c) {
  cores_[c]->l0d.flush();
  cores_[c]->l0i.flush();
}

void MemorySystem::flush_translations(unsigned c) {
  cores_[c]->dtlb.flush();
  cores_[c]->itlb.flush();
  flush_l0(c);
}

uint64_t MemorySystem::check_inclusion(unsigned c) const {
  uint64_t violations = 0;
  const CoreMem& cm = *cores_[c];
  const auto& mem = memory_;
  auto backing_paddr = [&](uint64_t backing, uint64_t& paddr) {
    const auto* p = reinterpret_cast<const uint8_t*>(backing);
    if (p < mem.host(mem.base()) || p >= mem.host(mem.base()) + mem.size()) return false;
    paddr = mem.paddr_of(p);
    return true;
  };
  for (unsigned i = 0; i < cm.l0d.num_entries(); ++i) {
    if (!cm.l0d.valid_at(i)) continue;
    const uint64_t vaddr = cm.l0d.vtag_at(i) << cm.l0d.line_shift();
    uint64_t paddr;
    if (!backing_paddr(cm.l0d.backing_at(i), paddr)) {
      ++violations;
      continue;
    }
    if (model_ != MemoryModel::Atomic && !cm.dtlb.contains(vaddr >> kPageShift)) ++violations;
    if (caches_) {
      const LineState s = caches_->data_state(c, paddr >> caches_->line_shift());
      if (s == LineState::I) ++violations;
      if (!cm.l0d.readonly_at(i) && s != LineState::M) ++violations;
    }
  }
  for (unsigned i = 0; i < cm.l0i.num_entries(); ++i) {
    if (!cm.l0i.valid_at(i)) continue;
    const uint64_t vaddr = cm.l0i.vtag_at(i) << cm.l0i.line_shift();
    uint64_t paddr;
    if (!backing_paddr(cm.l0i.backing_at(i), paddr)) {
      ++violations;
      continue;
    }
    if (model_ != MemoryModel::Atomic && !cm.itlb.contains(vaddr >> kPageShift)) ++violations;
    if (caches_ && !caches_->inst_present(c, paddr >> caches_->line_shift())) ++violations;
  }
  return violations;
}

void MemorySystem::reset_stats() {
  for (auto& cm : cores_) {
    cm->stats = {};
    cm->dtlb.stats = {};
    cm->itlb.stats = {};
  }
  if (caches_) caches_->reset_stats();
}

void MemorySystem::l1_data_changed(unsigned c, uint64_t line, const L1Line& copy, bool dropped) {
  CoreMem& cm = *cores_[c];
  const unsigned shift = caches_ ? caches_->line_shift() : 6;
  const uint64_t host_line = reinterpret_cast<uint64_t>(memory_.host(line << shift));
  if (copy.multi)
    cm.l0d.invalidate_backing(host_line, uint64_t(1) << shift);
  else
    cm.l0d.invalidate_vtag_if_backing(copy.vtag, host_line);
  if (dropped && cm.reservation.valid && (cm.reservation.paddr >> shift) == line) cm.reservation.valid = false;
}

void MemorySystem::l1_inst_dropped(unsigned c, uint64_t line, const L1Line& copy) {
  CoreMem& cm = *cores_[c];
  const unsigned shift = caches_ ? caches_->line_shift() : 6;
  const uint64_t host_line = reinterpret_cast<uint64_t>(memory_.host(line << shift));
  if (copy.multi)
    cm.l0i.invalidate_backing(host_line, uint64_t(1) << shift);
  else
    cm.l0i.invalidate_vtag_if_backing(copy.vtag, host_line);
}

}  // namespace rvdbt::mem
