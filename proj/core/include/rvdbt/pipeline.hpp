#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rvdbt/isa.hpp"

namespace rvdbt::pipeline {

struct PipelineParams {
  unsigned branch_penalty = 2;
  unsigned loaduse_penalty = 1;
  unsigned misaligned_fetch_penalty = 1;
  unsigned mul_latency = 2;  // extra cycles on top of the base cost
  unsigned div_latency = 32;
};

/// What a hook sees of the block under construction. Hooks record cycles
/// with insert_cycle_count; the translator reads `cycles` back after each
/// hook call.
struct TranslationContext {
  uint64_t pc = 0;
  unsigned index = 0;  // position of the instruction in its block
  uint64_t cycles = 0;

  void insert_cycle_count(uint64_t n) { cycles += n; }
};

/// Translation-time timing model. For control-flow instructions the
/// translator calls after_taken_branch (cost of the taken path) before
/// after_instruction (cost of the fall-through path); every other
/// instruction only gets after_instruction.
class PipelineModel {
 public:
  virtual ~PipelineModel() = default;
  virtual std::string_view name() const = 0;
  /// False for models that do not account time at all.
  virtual bool tracks_cycles() const { return true; }
  virtual void begin_block() {}
  virtual void after_instruction(TranslationContext& tc, const DecodedInstruction& op, bool compressed) = 0;
  virtual void after_taken_branch(TranslationContext& tc, const DecodedInstruction& op, bool compressed) = 0;
  /// Extra cost charged at run time when the block's first instruction is
  /// reached through a taken transfer.
  virtual unsigned taken_entry_penalty(const DecodedInstruction&, uint64_t) const { return 0; }
};

class AtomicModel final : public PipelineModel {
 public:
  std::string_view name() const override { return "atomic"; }
  bool tracks_cycles() const override { return false; }
  void after_instruction(TranslationContext&, const DecodedInstruction&, bool) override {}
  void after_taken_branch(TranslationContext&, const DecodedInstruction&, bool) override {}
};

class SimpleModel final : public PipelineModel {
 public:
  std::string_view name() const override { return "simple"; }
  void after_instruction(TranslationContext& tc, const DecodedInstruction&, bool) override { tc.insert_cycle_count(1); }
  void after_taken_branch(TranslationContext& tc, const DecodedInstruction&, bool) override {
    tc.insert_cycle_count(1);
  }
};

/// Five-stage scalar in-order pipeline: load-use bubbles, static
/// backward-taken/forward-not-taken prediction, multi-cycle mul/div and a
/// fetch penalty for 4-byte instructions entered at pc % 4 == 2.
class InOrderModel final : public PipelineModel {
 public:
  explicit InOrderModel(const PipelineParams& p = {}) : params_(p) {}
  std::string_view name() const override { return "inorder"; }
  void begin_block() override { last_load_dest_.reset(); }
  void after_instruction(TranslationContext& tc, const DecodedInstruction& op, bool compressed) override;
  void after_taken_branch(TranslationContext& tc, const DecodedInstruction& op, bool compressed) override;
  unsigned taken_entry_penalty(const DecodedInstruction& op, uint64_t pc) const override;

  const PipelineParams& params() const { return params_; }
  std::optional<unsigned> last_load_dest() const { return last_load_dest_; }

 private:
  unsigned base_cost(const DecodedInstruction& op) const;

  PipelineParams params_;
  std::optional<unsigned> last_load_dest_;
};

using ModelFactory = std::function<std::unique_ptr<PipelineModel>(const PipelineParams&)>;

/// Name -> factory table. Ids are stable in registration order; the
/// built-in models are atomic = 0, simple = 1, inorder = 2.
class ModelRegistry {
 public:
  ModelRegistry();

  /// Registers a model. Registering an existing name returns its id and
  /// leaves the original factory in place.
  unsigned register_model(std::string name, ModelFactory factory);

  std::optional<unsigned> id_of(std::string_view name) const;
  std::optional<std::string> name_of(unsigned id) const;
  std::unique_ptr<PipelineModel> create(unsigned id, const PipelineParams& params = {}) const;
  std::unique_ptr<PipelineModel> create(std::string_view name, const PipelineParams& params = {}) const;
  std::vector<std::string> names() const;

 private:
  struct Entry {
    std::string name;
    ModelFactory factory;
  };
  mutable std::mutex mutex_;
  std::vector<Entry> entries_;
};

ModelRegistry& registry();

inline constexpr unsigned kAtomicId = 0;
inline constexpr unsigned kSimpleId = 1;
inline constexpr unsigned kInOrderId = 2;

}  // namespace rvdbt::pipeline
