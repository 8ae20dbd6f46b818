#include "rvdbt/mem/tlb.hpp"

#include <algorithm>
#include <stdexcept>

#include "rvdbt/mem/sv39.hpp"

namespace rvdbt::mem {

Tlb::Tlb(unsigned entries, unsigned ways) : ways_(ways) {
  if (ways == 0 || entries == 0 || entries % ways != 0)
    throw std::invalid_argument("TLB entries must be a positive multiple of ways");
  sets_ = entries / ways;
  entries_.resize(entries);
  next_victim_.assign(sets_, 0);
}

TlbEntry* Tlb::lookup(uint64_t vpn, uint32_t asid) {
  TlbEntry* base = &entries_[set_of(vpn) * ways_];
  for (unsigned w = 0; w < ways_; ++w) {
    TlbEntry& e = base[w];
    if (!e.valid || e.vpn != vpn) continue;
    if (e.asid == asid || ((e.flags & pte::kG) && e.asid != kBareAsid && asid != kBareAsid)) return &e;
  }
  return nullptr;
}

const TlbEntry* Tlb::find(uint64_t vpn, uint32_t asid) const {
  return const_cast<Tlb*>(this)->lookup(vpn, asid);
}

bool Tlb::contains(uint64_t vpn) const {
  const TlbEntry* base = &entries_[set_of(vpn) * ways_];
  for (unsigned w = 0; w < ways_; ++w)
    if (base[w].valid && base[w].vpn == vpn) return true;
  return false;
}

std::optional<TlbEntry> Tlb::insert(const TlbEntry& entry) {
  const unsigned set = set_of(entry.vpn);
  TlbEntry* base = &entries_[set * ways_];
  for (unsigned w = 0; w < ways_; ++w) {
    if (base[w].valid && base[w].vpn == entry.vpn && base[w].asid == entry.asid) {
      base[w] = entry;
      base[w].valid = true;
      return std::nullopt;
    }
  }
  for (unsigned w = 0; w < ways_; ++w) {
    if (!base[w].valid) {
      base[w] = entry;
      base[w].valid = true;
      return std::nullopt;
    }
  }
  unsigned& victim = next_victim_[set];
  TlbEntry evicted = base[victim];
  base[victim] = entry;
  base[victim].valid = true;
  victim = (victim + 1) % ways_;
  ++stats.evictions;
  return evicted;
}

void Tlb::flush() {
  for (auto& e : entries_) e.valid = false;
  std::fill(next_victim_.begin(), next_victim_.end(), 0u);
}

std::optional<TlbEntry> Tlb::flush_page(uint64_t vpn) {
  std::optional<TlbEntry> dropped;
  TlbEntry* base = &entries_[set_of(vpn) * ways_];
  for (unsigned w = 0; w < ways_; ++w) {
    if (base[w].valid && base[w].vpn == vpn) {
      dropped = base[w];
      base[w].valid = false;
    }
  }
  return dropped;
}

}  // namespace rvdbt::mem
