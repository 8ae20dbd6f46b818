#pragma once

#include <cstdint>
#include <vector>

namespace rvdbt::mem {

enum class LineState : uint8_t { I, S, E, M };

char line_state_char(LineState s);

struct CacheGeometry {
  uint64_t size = 32 * 1024;
  unsigned ways = 8;
  unsigned line = 64;

  unsigned sets() const { return static_cast<unsigned>(size / (uint64_t(ways) * line)); }
};

struct CacheStats {
  uint64_t hits = 0;
  uint64_t misses = 0;
  uint64_t evictions = 0;
  uint64_t writebacks = 0;
};

struct CoherenceStats {
  uint64_t invalidations = 0;  // remote L1 copies invalidated
  uint64_t downgrades = 0;     // remote owners moved to S
  uint64_t upgrades = 0;       // S -> M without refetch
  uint64_t back_invalidations = 0;  // L1 copies dropped by L2 evictions
};

/// A line held in an L1. `vtag` remembers the L0 virtual tag that filled it
/// so the matching L0 slot can be dropped without a scan; `multi` is set
/// once a second virtual alias has been seen.
struct L1Line {
  uint64_t tag = 0;  // physical line number
  LineState state = LineState::I;
  uint64_t vtag = 0;
  bool multi = false;
};

/// Set-associative cache with round-robin replacement.
class L1Cache {
 public:
  explicit L1Cache(const CacheGeometry& g = {});

  L1Line* find(uint64_t line);
  const L1Line* find(uint64_t line) const;
  /// Returns the way that will be used for `line` (an invalid way first,
  /// otherwise the round-robin victim). Does not modify the cache.
  L1Line& victim(uint64_t line);
  void advance_victim(uint64_t line);

  const CacheGeometry& geometry() const { return geometry_; }
  std::vector<L1Line>& lines() { return lines_; }
  const std::vector<L1Line>& lines() const { return lines_; }

  CacheStats stats;

 private:
  unsigned set_of(uint64_t line) const { return static_cast<unsigned>(line % sets_); }

  CacheGeometry geometry_;
  unsigned sets_;
  std::vector<L1Line> lines_;
  std::vector<unsigned> next_victim_;
};

/// L2 line with its directory entry. The shared L2 is inclusive, so the
/// directory lives alongside the tags.
struct L2Line {
  uint64_t tag = 0;
  bool valid = false;
  bool dirty = false;
  uint64_t sharers = 0;   // L1 D holders
  int owner = -1;         // core holding E or M, else -1
  uint64_t iholders = 0;  // L1 I holders (not coherence-tracked)
};

/// Directory view of one physical line.
struct DirectoryEntry {
  LineState state = LineState::I;  // strongest state held by any L1
  uint64_t sharers = 0;
  int owner = -1;
};

/// Receives notifications whenever an L1 copy is dropped or downgraded so
/// the L0 filters stay inside the L1s.
class L1Listener {
 public:
  virtual ~L1Listener() = default;
  /// `dropped` is false when the copy stays valid in a weaker state.
  virtual void l1_data_changed(unsigned core, uint64_t line, const L1Line& copy, bool dropped) = 0;
  virtual void l1_inst_dropped(unsigned core, uint64_t line, const L1Line& copy) = 0;
};

struct CacheLatencies {
  unsigned l1_hit = 0;
  unsigned l2_hit = 20;
  unsigned memory = 100;
  unsigned coherence = 10;
};

struct CacheAccessResult {
  unsigned latency = 0;
  bool l1_hit = false;
  LineState state = LineState::I;  // requester's state after the access
};

/// Private L1 I/D caches per core and one shared inclusive L2. With
/// `coherent` set the L2 acts as a MESI directory; otherwise L1 states only
/// distinguish clean (E) from dirty (M).
class CacheHierarchy {
 public:
  CacheHierarchy(unsigned cores, const CacheGeometry& l1d, const CacheGeometry& l1i, const CacheGeometry& l2,
                 const CacheLatencies& lat, bool coherent, L1Listener* listener);

  unsigned cores() const { return static_cast<unsigned>(l1d_.size()); }
  bool coherent() const { return coherent_; }
  unsigned line_shift() const { return line_shift_; }

  /// Data access by `core` to physical line number `line`. `exclusive`
  /// requests M even for a read (atomics).
  CacheAccessResult access_data(unsigned core, uint64_t line, bool write, bool exclusive, uint64_t vtag);
  CacheAccessResult access_inst(unsigned core, uint64_t line, uint64_t vtag);

  /// Side-effect-free queries.
  LineState data_state(unsigned core, uint64_t line) const;
  bool inst_present(unsigned core, uint64_t line) const;
  DirectoryEntry directory(uint64_t line) const;

  /// Writes back every dirty line and invalidates everything.
  void drain();
  void reset_stats();

  /// Returns the number of violated invariants (SWMR, directory agreement,
  /// L2 inclusion). Full scan; intended for tests.
  uint64_t check_invariants() const;

  L1Cache& l1d(unsigned core) { return l1d_[core]; }
  L1Cache& l1i(unsigned core) { return l1i_[core]; }
  const L1Cache& l1d(unsigned core) const { return l1d_[core]; }
  const L1Cache& l1i(unsigned core) const { return l1i_[core]; }

  CacheStats l2_stats;
  CoherenceStats coherence;
  uint64_t memory_writebacks = 0;

 private:
  L2Line* l2_find(uint64_t line);
  const L2Line* l2_find(uint64_t line) const;
  L2Line& l2_allocate(uint64_t line);
  void l1d_drop(unsigned core, L1Line& l, L2Line* l2, bool count_eviction);
  void l1i_drop(unsigned core, L1Line& l, L2Line* l2, bool count_eviction);
  void note_vtag(L1Line& l, uint64_t vtag);

  bool coherent_;
  unsigned line_shift_;
  CacheLatencies lat_;
  L1Listener* listener_;
  std::vector<L1Cache> l1d_;
  std::vector<L1Cache> l1i_;
  CacheGeometry l2_geometry_;
  unsigned l2_sets_;
  std::vector<L2Line> l2_;
  std::vector<unsigned> l2_next_victim_;
};

}  // namespace rvdbt::mem
