#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "rvdbt/guest_memory.hpp"
#include "rvdbt/mem/cache.hpp"
#include "rvdbt/mem/l0.hpp"
#include "rvdbt/mem/sv39.hpp"
#include "rvdbt/mem/tlb.hpp"

namespace rvdbt::mem {

enum class MemoryModel : uint8_t { Atomic = 0, Tlb = 1, Cache = 2, Mesi = 3 };

std::string_view memory_model_name(MemoryModel m);
std::optional<MemoryModel> memory_model_from_name(std::string_view name);
std::optional<MemoryModel> memory_model_from_id(unsigned id);

struct MemoryParams {
  unsigned l0_entries = 1024;
  unsigned dtlb_entries = 64;
  unsigned dtlb_ways = 4;
  unsigned itlb_entries = 32;
  unsigned itlb_ways = 4;
  CacheGeometry l1d{32 * 1024, 8, 64};
  CacheGeometry l1i{32 * 1024, 8, 64};
  CacheGeometry l2{256 * 1024, 8, 64};
  CacheLatencies latencies;
  unsigned walk_latency_per_level = 3;
  AdPolicy ad = AdPolicy::HardwareUpdate;
};

struct CoreMemStats {
  uint64_t l0d_hits = 0;
  uint64_t l0d_misses = 0;
  uint64_t l0i_hits = 0;
  uint64_t l0i_misses = 0;
  uint64_t walks = 0;
  uint64_t walk_levels = 0;
  uint64_t faults = 0;
  uint64_t shadow_checks = 0;
  uint64_t shadow_divergences = 0;
  uint64_t inclusion_scans = 0;
  uint64_t inclusion_violations = 0;
};

struct Reservation {
  bool valid = false;
  uint64_t paddr = 0;
  uint64_t value = 0;
};

/// Per-core memory-side state. The L0 filters are read directly by the
/// executing hart; everything else is only touched through MemorySystem.
struct CoreMem {
  CoreMem(const MemoryParams& p, unsigned line_size)
      : l0d(p.l0_entries, line_size),
        l0i(p.l0_entries, line_size),
        dtlb(p.dtlb_entries, p.dtlb_ways),
        itlb(p.itlb_entries, p.itlb_ways) {}

  L0DataCache l0d;
  L0InstCache l0i;
  Tlb dtlb;
  Tlb itlb;
  CoreMemStats stats;
  Reservation reservation;
};

struct AccessOutcome {
  bool ok = false;
  uint8_t* host = nullptr;  // host address of the requested byte
  uint64_t paddr = 0;
  unsigned latency = 0;  // model cycles to charge
  ExceptionCause fault;
};

/// Result of a side-effect-free lookup used by the shadow checker.
struct ProbeResult {
  bool ok = false;
  uint64_t paddr = 0;
  uint8_t flags = 0;
  bool model_hit = false;  // every modelled structure would hit
  bool writable = false;   // a store could complete without a model action
  ExceptionCause fault;
};

class MemorySystem final : public L1Listener {
 public:
  MemorySystem(GuestMemory& memory, unsigned cores, const MemoryParams& params = {});

  GuestMemory& memory() { return memory_; }
  const MemoryParams& params() const { return params_; }
  unsigned cores() const { return static_cast<unsigned>(cores_.size()); }
  MemoryModel model() const { return model_; }
  unsigned line_size() const { return line_size_; }

  /// True if `line_size` is legal together with `model`.
  bool valid_combination(MemoryModel model, unsigned line_size) const;

  /// Switches model and/or line size. Every L0 is flushed. A change of
  /// model or line size also cold-starts the TLB and cache models (dirty
  /// lines are drained first). Throws std::invalid_argument on illegal
  /// combinations.
  void configure(MemoryModel model, unsigned line_size, bool reset_stats = true);

  CoreMem& core(unsigned c) { return *cores_[c]; }
  const CoreMem& core(unsigned c) const { return *cores_[c]; }
  CacheHierarchy* caches() { return caches_.get(); }
  const CacheHierarchy* caches() const { return caches_.get(); }

  /// Slow path for a data access that missed the L0. On success the L0 is
  /// filled and the host address of `vaddr` returned. `exclusive` asks the
  /// coherence protocol for ownership even on reads (LR).
  AccessOutcome data_access(unsigned c, uint64_t vaddr, AccessKind kind, const TranslationRegime& regime,
                            bool exclusive = false);

  /// Slow path for an instruction fetch of the line containing `vaddr`.
  AccessOutcome fetch_access(unsigned c, uint64_t vaddr, const TranslationRegime& regime);

  /// Translation with no side effects on model state, statistics or PTEs.
  ProbeResult probe(unsigned c, uint64_t vaddr, AccessKind kind, const TranslationRegime& regime) const;

  /// Functional translation for the translator and the syscall layer.
  std::optional<uint64_t> translate_functional(const TranslationRegime& regime, uint64_t vaddr, AccessKind kind,
                                               ExceptionCause* fault = nullptr) const;

  /// Compares an L0 hit against what the slow path would produce.
  /// Returns false (and counts a divergence) on mismatch.
  bool shadow_check(unsigned c, uint64_t vaddr, AccessKind kind, const TranslationRegime& regime, uint64_t host);

  void flush_l0(unsigned c);
  /// satp writes and SFENCE.VMA: both TLBs and both L0s.
  void flush_translations(unsigned c);

  /// Counts L0 entries that are not backed by the TLB and cache models.
  uint64_t check_inclusion(unsigned c) const;

  void reset_stats();

  // L1Listener
  void l1_data_changed(unsigned core, uint64_t line, const L1Line& copy, bool dropped) override;
  void l1_inst_dropped(unsigned core, uint64_t line, const L1Line& copy) override;

 private:
  struct Translation {
    bool ok = false;
    uint64_t paddr = 0;
    uint8_t flags = 0;
    unsigned latency = 0;
    ExceptionCause fault;
  };

  Translation translate(unsigned c, uint64_t vaddr, AccessKind kind, const TranslationRegime& regime);
  void build_caches();

  GuestMemory& memory_;
  MemoryParams params_;
  MemoryModel model_ = MemoryModel::Atomic;
  unsigned line_size_ = 64;
  std::vector<std::unique_ptr<CoreMem>> cores_;
  std::unique_ptr<CacheHierarchy> caches_;
};

}  // namespace rvdbt::mem
