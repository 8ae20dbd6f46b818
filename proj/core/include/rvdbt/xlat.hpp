#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rvdbt/isa.hpp"

namespace rvdbt {
struct Hart;
}

namespace rvdbt::xlat {

enum class StepStatus : uint8_t { Next, Jump, Trap };

struct Step;
using StepFn = StepStatus (*)(Hart&, const Step&);

/// One pre-bound micro-operation. Most steps are one guest instruction;
/// fetch steps (retires == 0) model the L0 I-cache access for a new line
/// and trap steps raise a fault found while translating.
struct Step {
  StepFn fn = nullptr;
  uint64_t pc = 0;
  int64_t imm = 0;
  uint8_t rd = 0;
  uint8_t rs1 = 0;
  uint8_t rs2 = 0;
  uint8_t length = 4;
  uint16_t csr = 0;
  uint32_t cycles = 0;        // cost when execution continues in order
  uint32_t taken_cycles = 0;  // cost when the step transfers control
  uint8_t retires = 1;
  bool sync_before = false;
  bool sync_after = false;
  uint32_t raw = 0;
  Op op = Op::ADDI;
  uint64_t aux = 0;  // fetch: line vaddr; trap: cause
};

/// Re-read at every block entry: the two bytes of a straddling
/// instruction that live on the second page.
struct CrossPageGuard {
  uint64_t vaddr = 0;
  uint16_t expected = 0;
  bool expect_fault = false;
};

struct BlockKey {
  uint64_t vpc = 0;
  uint64_t context = 0;
  bool operator==(const BlockKey&) const = default;
};

struct BlockKeyHash {
  size_t operator()(const BlockKey& k) const { return std::hash<uint64_t>()(k.vpc * 0x9e3779b97f4a7c15ull ^ k.context); }
};

struct Block;

struct Link {
  Block* target = nullptr;
  uint64_t epoch = 0;
  bool cross_page = false;
  uint64_t host = 0;  // L0 I backing of the target when cross_page
};

struct Block {
  BlockKey key;
  uint64_t end_vpc = 0;  // fall-through successor
  std::vector<Step> steps;
  unsigned instructions = 0;
  unsigned fetch_steps = 0;
  uint32_t entry_penalty = 0;
  std::optional<CrossPageGuard> guard;
  Link links[2];  // 0: fall-through, 1: taken
  uint64_t epoch = 0;
  bool valid = true;
  uint64_t executions = 0;

  uint64_t start_vpc() const { return key.vpc; }
  /// Annotated cycles along the fall-through path.
  uint64_t static_cycles() const;
};

struct CodeCacheStats {
  uint64_t translations = 0;
  uint64_t retranslations = 0;  // cross-page guard mismatches
  uint64_t decodes = 0;
  uint64_t lookups = 0;
  uint64_t hits = 0;
  uint64_t flushes = 0;
  uint64_t partial_flushes = 0;
  uint64_t links_installed = 0;
};

/// Per-core translation cache. Flushing bumps the epoch so stale links are
/// never followed; blocks removed by a partial flush are parked until the
/// next full flush because links and the running dispatch loop may still
/// point at them.
class CodeCache {
 public:
  Block* find(const BlockKey& key);
  Block* insert(std::unique_ptr<Block> block);
  void flush();
  /// Drops blocks whose first instruction lies in the 4 KiB page at `vpage`.
  void flush_page(uint64_t vpage);

  uint64_t epoch() const { return epoch_; }
  size_t size() const { return map_.size(); }

  template <typename F>
  void for_each(F&& f) const {
    for (const auto& [k, b] : map_) f(*b);
  }

  CodeCacheStats stats;

 private:
  std::unordered_map<BlockKey, std::unique_ptr<Block>, BlockKeyHash> map_;
  std::vector<std::unique_ptr<Block>> graveyard_;
  uint64_t epoch_ = 1;
};

inline constexpr unsigned kMaxBlockInstructions = 256;

/// Code-cache context for a privilege level and satp value.
uint64_t context_key(Privilege priv, uint64_t satp);

/// Translates the block at `vpc` for the hart's current context and
/// pipeline model. Fetches are functional; faults become trap steps.
std::unique_ptr<Block> translate(Hart& hart, uint64_t vpc);
/// Rebuilds `block` in place (same object, links dropped).
void retranslate(Hart& hart, Block& block);

/// True when the block's cross-page guard still matches guest memory.
bool guard_holds(Hart& hart, const Block& block);

std::string dump_block(const Block& block);

/// Step function for a decoded operation.
StepFn step_for(Op op);
StepStatus step_fetch(Hart& h, const Step& s);
StepStatus step_trap(Hart& h, const Step& s);

/// Runs blocks until the hart must return to the outer loop: a stop or
/// rendezvous request, a wait state, or the instruction limit.
void run_blocks(Hart& hart);

}  // namespace rvdbt::xlat
