#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>

#include "rvdbt/isa.hpp"
#include "rvdbt/mem/memory_system.hpp"
#include "rvdbt/pipeline.hpp"
#include "rvdbt/sched.hpp"
#include "rvdbt/xlat.hpp"

namespace rvdbt {

class Machine;

enum class WaitState : uint8_t { None, Wfi, Futex, Stopped };

struct CsrState {
  uint64_t mstatus = 0;
  uint64_t medeleg = 0;
  uint64_t mideleg = 0;
  uint64_t mie = 0;
  uint64_t mtvec = 0;
  uint64_t mscratch = 0;
  uint64_t mepc = 0;
  uint64_t mcause = 0;
  uint64_t mtval = 0;
  uint64_t mcounteren = 0;
  uint64_t mcountinhibit = 0;
  uint64_t stvec = 0;
  uint64_t sscratch = 0;
  uint64_t sepc = 0;
  uint64_t scause = 0;
  uint64_t stval = 0;
  uint64_t scounteren = 0;
  uint64_t satp = 0;
  uint64_t pmpcfg0 = 0;
  uint64_t pmpaddr0 = 0;
  int64_t mcycle_adjust = 0;  // mcycle = clock + adjust
  int64_t minstret_adjust = 0;
  bool simctrl_error = false;
};

struct HartStats {
  uint64_t blocks_executed = 0;
  uint64_t chained = 0;     // block transitions that followed a link
  uint64_t dispatches = 0;  // transitions resolved through the code cache
  uint64_t traps = 0;
  uint64_t interrupts = 0;
  uint64_t ifetch_accesses = 0;  // L0 I accesses issued by fetch steps
  uint64_t wfi_waits = 0;
  uint64_t futex_waits = 0;
};

/// Deferred work requested by a step and handled at the next block end,
/// when no block of this hart is executing.
namespace deferred {
inline constexpr uint32_t kFlushCode = 1;
inline constexpr uint32_t kFlushCodePage = 2;
}  // namespace deferred

/// One simulated hardware thread. Fields are public because the step
/// functions in the executor read and write them directly.
struct Hart {
  Hart(Machine& machine, unsigned id);

  uint64_t x[33] = {};  // x[32] absorbs writes to x0
  uint64_t pc = 0;
  Privilege priv = Privilege::Machine;
  CsrState csr;
  uint64_t minstret = 0;
  std::atomic<uint64_t> mip{0};
  std::atomic<WaitState> wait{WaitState::None};

  sched::ExecutionContext ctx;
  Machine& machine;
  mem::MemorySystem& memsys;
  mem::CoreMem& cm;
  xlat::CodeCache code;
  std::unique_ptr<pipeline::PipelineModel> model;
  unsigned model_id = pipeline::kSimpleId;

  mem::TranslationRegime data_regime;
  mem::TranslationRegime fetch_regime;
  uint64_t context = 0;  // code-cache context key for (priv, satp)

  bool entered_taken = true;
  bool shadow_l0 = false;
  unsigned consecutive_traps = 0;
  uint32_t deferred = 0;
  uint64_t deferred_page = 0;
  uint64_t futex_addr = 0;
  uint64_t clear_child_tid = 0;
  std::array<uint64_t, 8> recent_causes = {};
  unsigned recent_cause_pos = 0;
  HartStats stats;

  unsigned id() const { return ctx.core_index; }
  uint64_t mcycle() const {
    return static_cast<uint64_t>(static_cast<int64_t>(ctx.local_clock + ctx.pending_cycles) + csr.mcycle_adjust);
  }
  uint64_t instret() const { return static_cast<uint64_t>(static_cast<int64_t>(minstret) + csr.minstret_adjust); }

  uint64_t memory_paddr(const uint8_t* host) const { return memsys.memory().paddr_of(host); }

  /// Recomputes the translation regimes and code-cache context after a
  /// change of privilege, satp or mstatus.
  void update_regimes();

  /// Replaces the pipeline model; the caller arranges the code-cache flush.
  void set_model(unsigned id, const pipeline::PipelineParams& params);

  void reset(uint64_t entry);
};

}  // namespace rvdbt
