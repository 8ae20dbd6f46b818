#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace rvdbt::mem {

/// TLB entries created for untranslated accesses use an ASID value outside
/// the architectural 16-bit range so they never match translated lookups.
inline constexpr uint32_t kBareAsid = 0x10000;

struct TlbEntry {
  uint64_t vpn = 0;
  uint64_t ppn = 0;
  uint8_t flags = 0;  // leaf PTE permission bits
  uint32_t asid = 0;  // kBareAsid for untranslated entries
  uint64_t page_size = 4096;
  bool valid = false;
};

struct TlbStats {
  uint64_t hits = 0;
  uint64_t misses = 0;
  uint64_t evictions = 0;
};

/// Set-associative TLB over 4 KiB pages with round-robin replacement.
/// Superpage mappings are splintered into 4 KiB entries.
class Tlb {
 public:
  explicit Tlb(unsigned entries = 64, unsigned ways = 4);

  unsigned sets() const { return sets_; }
  unsigned ways() const { return ways_; }

  /// Returns the matching entry, or nullptr. Global pages match any
  /// translated ASID.
  TlbEntry* lookup(uint64_t vpn, uint32_t asid);
  const TlbEntry* find(uint64_t vpn, uint32_t asid) const;

  /// Inserts (or refreshes) a mapping. Returns the entry that had to be
  /// replaced to make room, if any.
  std::optional<TlbEntry> insert(const TlbEntry& entry);

  void flush();
  /// Drops every entry for `vpn` regardless of ASID.
  std::optional<TlbEntry> flush_page(uint64_t vpn);

  bool contains(uint64_t vpn) const;

  template <typename F>
  void for_each_valid(F&& f) const {
    for (const auto& e : entries_)
      if (e.valid) f(e);
  }

  TlbStats stats;

 private:
  unsigned set_of(uint64_t vpn) const { return static_cast<unsigned>(vpn % sets_); }

  unsigned sets_;
  unsigned ways_;
  std::vector<TlbEntry> entries_;
  std::vector<unsigned> next_victim_;
};

}  // namespace rvdbt::mem
