#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rvdbt/mem/memory_system.hpp"
#include "rvdbt/pipeline.hpp"
#include "rvdbt/sys.hpp"

namespace rvdbt {

enum class ExecMode : uint8_t { Lockstep, Parallel };

std::string_view exec_mode_name(ExecMode m);
std::optional<ExecMode> exec_mode_from_name(std::string_view name);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimConfig {
  unsigned cores = 1;
  sys::EmulationTarget target = sys::EmulationTarget::Machine;
  /// One entry for all cores, or one per core.
  std::vector<std::string> pipeline = {"simple"};
  pipeline::PipelineParams pipeline_params;
  mem::MemoryModel memory = mem::MemoryModel::Atomic;
  unsigned line_size = 64;
  mem::MemoryParams mem_params;
  ExecMode mode = ExecMode::Lockstep;
  std::optional<uint64_t> memory_base;  // defaults per target
  uint64_t memory_size = 256ull << 20;
  std::string stats_path;
  bool deterministic = false;
  uint64_t max_insns = 0;   // per core, 0 = unlimited
  uint64_t max_cycles = 0;  // 0 = unlimited
  bool dump_blocks = false;
  bool shadow_l0 = false;        // verify every L0 hit against the slow path
  bool check_inclusion = false;  // scan L0 inclusion after every slow path
  bool reset_stats_on_switch = false;
  uint64_t frequency_hz = 100'000'000;
  unsigned trap_storm_limit = 64;
  bool echo_console = true;
  uint64_t user_stack_size = 8ull << 20;

  uint64_t effective_memory_base() const;
  const std::string& pipeline_for(unsigned core) const;
};

/// Returns a diagnostic for an illegal configuration, or nullopt.
std::optional<std::string> validate(const SimConfig& cfg);

/// Applies a JSON document on top of `cfg`. Unknown keys are errors.
void apply_json(SimConfig& cfg, std::string_view text);
void apply_json_file(SimConfig& cfg, const std::string& path);

}  // namespace rvdbt
