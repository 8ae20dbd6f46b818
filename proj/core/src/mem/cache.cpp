#include "rvdbt/mem/cache.hpp"

#include <bit>
#include <stdexcept>

namespace rvdbt::mem {

char line_state_char(LineState s) {
  switch (s) {
    case LineState::I: return 'I';
    case LineState::S: return 'S';
    case LineState::E: return 'E';
    default: return 'M';
  }
}

L1Cache::L1Cache(const CacheGeometry& g) : geometry_(g) {
  if (g.ways == 0 || g.line == 0 || !std::has_single_bit(g.line) || g.size % (uint64_t(g.ways) * g.line) != 0 ||
      g.sets() == 0)
    throw std::invalid_argument("cache size must be a positive multiple of ways * line");
  sets_ = g.sets();
  lines_.resize(size_t(sets_) * g.ways);
  next_victim_.assign(sets_, 0);
}

L1Line* L1Cache::find(uint64_t line) {
  L1Line* base = &lines_[size_t(set_of(line)) * geometry_.ways];
  for (unsigned w = 0; w < geometry_.ways; ++w)
    if (base[w].state != LineState::I && base[w].tag == line) return &base[w];
  return nullptr;
}

const L1Line* L1Cache::find(uint64_t line) const { return const_cast<L1Cache*>(this)->find(line); }

L1Line& L1Cache::victim(uint64_t line) {
  const unsigned set = set_of(line);
  L1Line* base = &lines_[size_t(set) * geometry_.ways];
  for (unsigned w = 0; w < geometry_.ways; ++w)
    if (base[w].state == LineState::I) return base[w];
  return base[next_victim_[set]];
}

void L1Cache::advance_victim(uint64_t line) {
  const unsigned set = set_of(line);
  next_victim_[set] = (next_victim_[set] + 1) % geometry_.ways;
}

CacheHierarchy::CacheHierarchy(unsigned cores, const CacheGeometry& l1d, const CacheGeometry& l1i,
                               const CacheGeometry& l2, const CacheLatencies& lat, bool coherent,
                               L1Listener* listener)
    : coherent_(coherent), lat_(lat), listener_(listener), l2_geometry_(l2) {
  if (cores == 0 || cores > 64) throw std::invalid_argument("cache hierarchy supports 1..64 cores");
  if (l1d.line != l2.line || l1i.line != l2.line)
    throw std::invalid_argument("all cache levels must share one line size");
  line_shift_ = static_cast<unsigned>(std::countr_zero(l2.line));
  for (unsigned c = 0; c < cores; ++c) {
    l1d_.emplace_back(l1d);
    l1i_.emplace_back(l1i);
  }
  L1Cache check(l2);  // validates the geometry
  l2_sets_ = l2.sets();
  l2_.resize(size_t(l2_sets_) * l2.ways);
  l2_next_victim_.assign(l2_sets_, 0);
}

L2Line* CacheHierarchy::l2_find(uint64_t line) {
  L2Line* base = &l2_[size_t(line % l2_sets_) * l2_geometry_.ways];
  for (unsigned w = 0; w < l2_geometry_.ways; ++w)
    if (base[w].valid && base[w].tag == line) return &base[w];
  return nullptr;
}

const L2Line* CacheHierarchy::l2_find(uint64_t line) const { return const_cast<CacheHierarchy*>(this)->l2_find(line); }

void CacheHierarchy::note_vtag(L1Line& l, uint64_t vtag) {
  if (l.vtag != vtag) l.multi = true;
}

void CacheHierarchy::l1d_drop(unsigned core, L1Line& l, L2Line* l2, bool count_eviction) {
  L1Cache& cache = l1d_[core];
  if (count_eviction) ++cache.stats.evictions;
  if (l.state == LineState::M) {
    ++cache.stats.writebacks;
    if (l2) l2->dirty = true;
  }
  if (l2) {
    l2->sharers &= ~(1ull << core);
    if (l2->owner == int(core)) l2->owner = -1;
  }
  const L1Line copy = l;
  l.state = LineState::I;
  if (listener_) listener_->l1_data_changed(core, copy.tag, copy, true);
}

void CacheHierarchy::l1i_drop(unsigned core, L1Line& l, L2Line* l2, bool count_eviction) {
  if (count_eviction) ++l1i_[core].stats.evictions;
  if (l2) l2->iholders &= ~(1ull << core);
  const L1Line copy = l;
  l.state = LineState::I;
  if (listener_) listener_->l1_inst_dropped(core, copy.tag, copy);
}

L2Line& CacheHierarchy::l2_allocate(uint64_t line) {
  const unsigned set = static_cast<unsigned>(line % l2_sets_);
  L2Line* base = &l2_[size_t(set) * l2_geometry_.ways];
  L2Line* slot = nullptr;
  for (unsigned w = 0; w < l2_geometry_.ways && !slot; ++w)
    if (!base[w].valid) slot = &base[w];
  if (!slot) {
    slot = &base[l2_next_victim_[set]];
    l2_next_victim_[set] = (l2_next_victim_[set] + 1) % l2_geometry_.ways;
    ++l2_stats.evictions;
    // Inclusion: every L1 copy of the victim goes first.
    for (unsigned c = 0; c < cores(); ++c) {
      if (slot->sharers & (1ull << c)) {
        if (L1Line* l = l1d_[c].find(slot->tag)) {
          ++coherence.back_invalidations;
          l1d_drop(c, *l, slot, false);
        }
      }
      if (slot->iholders & (1ull << c)) {
        if (L1Line* l = l1i_[c].find(slot->tag)) {
          ++coherence.back_invalidations;
          l1i_drop(c, *l, slot, false);
        }
      }
    }
    if (slot->dirty) {
      ++l2_stats.writebacks;
      ++memory_writebacks;
    }
  }
  *slot = L2Line{};
  slot->tag = line;
  slot->valid = true;
  return *slot;
}

CacheAccessResult CacheHierarchy::access_data(unsigned core, uint64_t line, bool write, bool exclusive,
                                              uint64_t vtag) {
  CacheAccessResult r;
  r.latency = lat_.l1_hit;
  L1Cache& l1 = l1d_[core];
  const bool want_m = write || (exclusive && coherent_);

  if (L1Line* l = l1.find(line)) {
    ++l1.stats.hits;
    r.l1_hit = true;
    note_vtag(*l, vtag);
    if (want_m && l->state != LineState::M) {
      L2Line* l2 = l2_find(line);
      if (coherent_ && l->state == LineState::S) {
        ++coherence.upgrades;
        bool any = false;
        for (unsigned c = 0; c < cores(); ++c) {
          if (c == core || !(l2->sharers & (1ull << c))) continue;
          if (L1Line* other = l1d_[c].find(line)) {
            ++coherence.invalidations;
            l1d_drop(c, *other, l2, false);
            any = true;
          }
        }
        if (any) r.latency += lat_.coherence;
      }
      if (coherent_) {
        // An exclusive read of an S line ends in E; writes end in M.
        l->state = write ? LineState::M : LineState::E;
        l2->owner = int(core);
        l2->sharers = 1ull << core;
      } else {
        l->state = LineState::M;
      }
    }
    r.state = l->state;
    return r;
  }

  ++l1.stats.misses;
  r.latency += lat_.l2_hit;
  L2Line* l2 = l2_find(line);
  if (l2) {
    ++l2_stats.hits;
  } else {
    ++l2_stats.misses;
    r.latency += lat_.memory;
    l2 = &l2_allocate(line);
  }

  LineState new_state;
  if (coherent_) {
    bool action = false;
    if (want_m) {
      for (unsigned c = 0; c < cores(); ++c) {
        if (c == core || !(l2->sharers & (1ull << c))) continue;
        if (L1Line* other = l1d_[c].find(line)) {
          ++coherence.invalidations;
          l1d_drop(c, *other, l2, false);
          action = true;
        }
      }
      new_state = write ? LineState::M : LineState::E;
    } else {
      if (l2->owner >= 0 && l2->owner != int(core)) {
        const unsigned o = unsigned(l2->owner);
        if (L1Line* other = l1d_[o].find(line)) {
          ++coherence.downgrades;
          if (other->state == LineState::M) {
            ++l1d_[o].stats.writebacks;
            l2->dirty = true;
          }
          other->state = LineState::S;
          if (listener_) listener_->l1_data_changed(o, line, *other, false);
          action = true;
        }
        l2->owner = -1;
      }
      new_state = (l2->sharers & ~(1ull << core)) ? LineState::S : LineState::E;
    }
    if (action) r.latency += lat_.coherence;
  } else {
    new_state = write ? LineState::M : LineState::E;
  }

  L1Line& slot = l1.victim(line);
  if (slot.state != LineState::I) {
    l1.advance_victim(line);
    l1d_drop(core, slot, l2_find(slot.tag), true);
  }
  slot.tag = line;
  slot.state = new_state;
  slot.vtag = vtag;
  slot.multi = false;
  l2->sharers |= 1ull << core;
  if (coherent_ && (new_state == LineState::E || new_state == LineState::M)) l2->owner = int(core);
  r.state = new_state;
  return r;
}

CacheAccessResult CacheHierarchy::access_inst(unsigned core, uint64_t line, uint64_t vtag) {
  CacheAccessResult r;
  r.latency = lat_.l1_hit;
  L1Cache& l1 = l1i_[core];
  if (L1Line* l = l1.find(line)) {
    ++l1.stats.hits;
    note_vtag(*l, vtag);
    r.l1_hit = true;
    r.state = l->state;
    return r;
  }
  ++l1.stats.misses;
  r.latency += lat_.l2_hit;
  L2Line* l2 = l2_find(line);
  if (l2) {
    ++l2_stats.hits;
  } else {
    ++l2_stats.misses;
    r.latency += lat_.memory;
    l2 = &l2_allocate(line);
  }
  L1Line& slot = l1.victim(line);
  if (slot.state != LineState::I) {
    l1.advance_victim(line);
    l1i_drop(core, slot, l2_find(slot.tag), true);
  }
  slot.tag = line;
  slot.state = LineState::S;
  slot.vtag = vtag;
  slot.multi = false;
  l2->iholders |= 1ull << core;
  r.state = LineState::S;
  return r;
}

LineState CacheHierarchy::data_state(unsigned core, uint64_t line) const {
  const L1Line* l = l1d_[core].find(line);
  return l ? l->state : LineState::I;
}

bool CacheHierarchy::inst_present(unsigned core, uint64_t line) const { return l1i_[core].find(line) != nullptr; }

DirectoryEntry CacheHierarchy::directory(uint64_t line) const {
  DirectoryEntry d;
  const L2Line* l2 = l2_find(line);
  if (!l2) return d;
  d.sharers = l2->sharers;
  d.owner = l2->owner;
  for (unsigned c = 0; c < cores(); ++c) {
    const LineState s = data_state(c, line);
    if (static_cast<int>(s) > static_cast<int>(d.state)) d.state = s;
  }
  return d;
}

void CacheHierarchy::drain() {
  for (unsigned c = 0; c < cores(); ++c) {
    for (L1Line& l : l1d_[c].lines())
      if (l.state != LineState::I) l1d_drop(c, l, l2_find(l.tag), false);
    for (L1Line& l : l1i_[c].lines())
      if (l.state != LineState::I) l1i_drop(c, l, l2_find(l.tag), false);
  }
  for (L2Line& l : l2_) {
    if (l.valid && l.dirty) {
      ++l2_stats.writebacks;
      ++memory_writebacks;
    }
    l = L2Line{};
  }
}

void CacheHierarchy::reset_stats() {
  for (auto& c : l1d_) c.stats = {};
  for (auto& c : l1i_) c.stats = {};
  l2_stats = {};
  coherence = {};
  memory_writebacks = 0;
}

uint64_t CacheHierarchy::check_invariants() const {
  uint64_t violations = 0;
  // L1 -> L2 inclusion and directory membership.
  for (unsigned c = 0; c < cores(); ++c) {
    for (const L1Line& l : l1d_[c].lines()) {
      if (l.state == LineState::I) continue;
      const L2Line* l2 = l2_find(l.tag);
      if (!l2 || !(l2->sharers & (1ull << c))) ++violations;
      if (!coherent_ && l.state == LineState::S) ++violations;
    }
    for (const L1Line& l : l1i_[c].lines()) {
      if (l.state == LineState::I) continue;
      const L2Line* l2 = l2_find(l.tag);
      if (!l2 || !(l2->iholders & (1ull << c))) ++violations;
    }
  }
  // Directory -> L1 agreement and SWMR.
  for (const L2Line& l2 : l2_) {
    if (!l2.valid) continue;
    uint64_t holders = 0, iholders = 0;
    unsigned exclusive = 0;
    int exclusive_core = -1;
    for (unsigned c = 0; c < cores(); ++c) {
      const LineState s = data_state(c, l2.tag);
      if (s != LineState::I) holders |= 1ull << c;
      if (s == LineState::E || s == LineState::M) {
        ++exclusive;
        exclusive_core = int(c);
      }
      if (inst_present(c, l2.tag)) iholders |= 1ull << c;
    }
    if (holders != l2.sharers) ++violations;
    if (iholders != l2.iholders) ++violations;
    if (coherent_) {
      if (exclusive > 1) ++violations;
      if (exclusive == 1 && std::popcount(holders) != 1) ++violations;
      if (l2.owner != exclusive_core) ++violations;
    }
  }
  return violations;
}

}  // namespace rvdbt::mem
