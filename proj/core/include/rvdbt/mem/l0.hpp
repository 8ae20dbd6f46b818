#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <vector>

namespace rvdbt::mem {

/// One L0 slot, two machine words.
///   tag:  (vtag << 1) | readonly   (data cache)
///         vtag                     (instruction cache)
///   xor:  vaddr_line ^ backing_line
struct L0Entry {
  uint64_t tag;
  uint64_t xor_addr;
};

inline constexpr uint64_t kL0InvalidTag = ~0ull;

/// Direct-mapped filter in front of the memory model. Entries translate a
/// virtual line to a host backing line; a hit bypasses the model entirely.
/// `WithPermission` selects the data-cache layout with a readonly bit.
template <bool WithPermission>
class L0Cache {
 public:
  L0Cache(unsigned num_entries = 1024, unsigned line_size = 64) { configure(num_entries, line_size); }

  void configure(unsigned num_entries, unsigned line_size) {
    entries_.assign(num_entries, L0Entry{kL0InvalidTag, 0});
    index_mask_ = num_entries - 1;
    line_shift_ = static_cast<unsigned>(std::countr_zero(line_size));
  }

  unsigned line_shift() const { return line_shift_; }
  uint64_t line_size() const { return 1ull << line_shift_; }
  unsigned num_entries() const { return static_cast<unsigned>(entries_.size()); }
  uint64_t vtag(uint64_t vaddr) const { return vaddr >> line_shift_; }
  unsigned index(uint64_t vtag) const { return static_cast<unsigned>(vtag & index_mask_); }

  /// Read (or fetch) lookup: returns the backing address, or 0 on a miss
  /// (backing addresses are host pointers and never zero).
  uint64_t lookup_read(uint64_t vaddr) const {
    const uint64_t vt = vaddr >> line_shift_;
    const L0Entry& e = entries_[vt & index_mask_];
    if constexpr (WithPermission) {
      if ((e.tag >> 1) == vt) return vaddr ^ e.xor_addr;
    } else {
      if (e.tag == vt) return vaddr ^ e.xor_addr;
    }
    return 0;
  }

  /// Write lookup: fails for entries carrying the readonly bit.
  uint64_t lookup_write(uint64_t vaddr) const requires WithPermission {
    const uint64_t vt = vaddr >> line_shift_;
    const L0Entry& e = entries_[vt & index_mask_];
    if ((vt << 1) == e.tag) return vaddr ^ e.xor_addr;
    return 0;
  }

  void fill(uint64_t vaddr, uint64_t backing, bool readonly = false) {
    const uint64_t vt = vaddr >> line_shift_;
    const uint64_t mask = ~(line_size() - 1);
    L0Entry& e = entries_[vt & index_mask_];
    if constexpr (WithPermission) {
      e.tag = (vt << 1) | (readonly ? 1u : 0u);
    } else {
      (void)readonly;
      e.tag = vt;
    }
    e.xor_addr = (vaddr & mask) ^ (backing & mask);
  }

  bool valid_at(unsigned idx) const { return entries_[idx].tag != kL0InvalidTag; }
  const L0Entry& at(unsigned idx) const { return entries_[idx]; }

  uint64_t vtag_at(unsigned idx) const {
    if constexpr (WithPermission) return entries_[idx].tag >> 1;
    return entries_[idx].tag;
  }
  bool readonly_at(unsigned idx) const {
    if constexpr (WithPermission) return entries_[idx].tag & 1;
    return false;
  }
  /// Backing line address held by a valid slot.
  uint64_t backing_at(unsigned idx) const { return (vtag_at(idx) << line_shift_) ^ entries_[idx].xor_addr; }

  /// Invalidates the slot holding `vtag` if present. Returns true if it did.
  bool invalidate_vtag(uint64_t vt) {
    L0Entry& e = entries_[vt & index_mask_];
    if (e.tag != kL0InvalidTag && vtag_at(vt & index_mask_) == vt) {
      e.tag = kL0InvalidTag;
      return true;
    }
    return false;
  }

  /// Invalidates the slot for `vtag` only if it maps to `backing_line`.
  bool invalidate_vtag_if_backing(uint64_t vt, uint64_t backing_line) {
    const unsigned idx = static_cast<unsigned>(vt & index_mask_);
    if (valid_at(idx) && vtag_at(idx) == vt && backing_at(idx) == backing_line) {
      entries_[idx].tag = kL0InvalidTag;
      return true;
    }
    return false;
  }

  /// Invalidates every entry whose backing range intersects
  /// [backing_line, backing_line + len).
  unsigned invalidate_backing(uint64_t backing_line, uint64_t len) {
    unsigned n = 0;
    for (unsigned i = 0; i < entries_.size(); ++i) {
      if (!valid_at(i)) continue;
      const uint64_t b = backing_at(i);
      if (b + line_size() > backing_line && b < backing_line + len) {
        entries_[i].tag = kL0InvalidTag;
        ++n;
      }
    }
    return n;
  }

  /// Invalidates all entries for lines inside the virtual page range
  /// [vpage_base, vpage_base + page_size).
  unsigned invalidate_vrange(uint64_t vbase, uint64_t len) {
    unsigned n = 0;
    const uint64_t first = vbase >> line_shift_;
    const uint64_t count = std::max<uint64_t>(1, len >> line_shift_);
    if (count >= entries_.size()) {
      for (unsigned i = 0; i < entries_.size(); ++i) {
        if (valid_at(i)) {
          const uint64_t vt = vtag_at(i);
          if (vt >= first && vt < first + count) {
            entries_[i].tag = kL0InvalidTag;
            ++n;
          }
        }
      }
      return n;
    }
    for (uint64_t vt = first; vt < first + count; ++vt) n += invalidate_vtag(vt) ? 1 : 0;
    return n;
  }

  void flush() {
    for (auto& e : entries_) e.tag = kL0InvalidTag;
  }

 private:
  std::vector<L0Entry> entries_;
  uint64_t index_mask_ = 0;
  unsigned line_shift_ = 6;
};

using L0DataCache = L0Cache<true>;
using L0InstCache = L0Cache<false>;

}  // namespace rvdbt::mem
