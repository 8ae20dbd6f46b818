#include "rvdbt/pipeline.hpp"

namespace rvdbt::pipeline {

namespace {

bool reads_register(const DecodedInstruction& op, unsigned reg) {
  const OpInfo& info = op_info(op.op);
  return (info.reads_rs1 && op.rs1 == reg) || (info.reads_rs2 && op.rs2 == reg);
}

}  // namespace

unsigned InOrderModel::base_cost(const DecodedInstruction& op) const {
  const OpInfo& info = op_info(op.op);
  unsigned cost = 1;
  if (last_load_dest_ && reads_register(op, *last_load_dest_)) cost += params_.loaduse_penalty;
  if (info.is_mul) cost += params_.mul_latency;
  if (info.is_div) cost += params_.div_latency;
  return cost;
}

void InOrderModel::after_taken_branch(TranslationContext& tc, const DecodedInstruction& op, bool) {
  unsigned cost = base_cost(op);
  if (op.op == Op::JALR)
    cost += params_.branch_penalty;
  else if (op_info(op.op).is_branch && op.imm > 0)
    cost += params_.branch_penalty;  // forward branches are predicted not taken
  tc.insert_cycle_count(cost);
}

void InOrderModel::after_instruction(TranslationContext& tc, const DecodedInstruction& op, bool) {
  const OpInfo& info = op_info(op.op);
  unsigned cost = base_cost(op);
  if (info.is_branch && op.imm <= 0) cost += params_.branch_penalty;  // backward predicted taken
  tc.insert_cycle_count(cost);
  const bool loads = info.is_load || info.is_amo;
  if (loads && op.rd != 0)
    last_load_dest_ = op.rd;
  else
    last_load_dest_.reset();
}

unsigned InOrderModel::taken_entry_penalty(const DecodedInstruction& op, uint64_t pc) const {
  return (!op.compressed() && (pc & 3) == 2) ? params_.misaligned_fetch_penalty : 0;
}

ModelRegistry::ModelRegistry() {
  register_model("atomic", [](const PipelineParams&) { return std::make_unique<AtomicModel>(); });
  register_model("simple", [](const PipelineParams&) { return std::make_unique<SimpleModel>(); });
  register_model("inorder", [](const PipelineParams& p) { return std::make_unique<InOrderModel>(p); });
}

unsigned ModelRegistry::register_model(std::string name, ModelFactory factory) {
  std::lock_guard lock(mutex_);
  for (unsigned i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return i;
  entries_.push_back({std::move(name), std::move(factory)});
  return static_cast<unsigned>(entries_.size() - 1);
}

std::optional<unsigned> ModelRegistry::id_of(std::string_view name) const {
  std::lock_guard lock(mutex_);
  for (unsigned i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return i;
  return std::nullopt;
}

std::optional<std::string> ModelRegistry::name_of(unsigned id) const {
  std::lock_guard lock(mutex_);
  if (id >= entries_.size()) return std::nullopt;
  return entries_[id].name;
}

std::unique_ptr<PipelineModel> ModelRegistry::create(unsigned id, const PipelineParams& params) const {
  ModelFactory f;
  {
    std::lock_guard lock(mutex_);
    if (id >= entries_.size()) return nullptr;
    f = entries_[id].factory;
  }
  return f(params);
}

std::unique_ptr<PipelineModel> ModelRegistry::create(std::string_view name, const PipelineParams& params) const {
  const auto id = id_of(name);
  return id ? create(*id, params) : nullptr;
}

std::vector<std::string> ModelRegistry::names() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& e : entries_) out.push_back(e.name);
  return out;
}

ModelRegistry& registry() {
  static ModelRegistry r;
  return r;
}

}  // namespace rvdbt::pipeline
