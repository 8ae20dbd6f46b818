#include "rvdbt/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace rvdbt {

using nlohmann::json;

std::string_view exec_mode_name(ExecMode m) { return m == ExecMode::Lockstep ? "lockstep" : "parallel"; }

std::optional<ExecMode> exec_mode_from_name(std::string_view name) {
  if (name == "lockstep") return ExecMode::Lockstep;
  if (name == "parallel") return ExecMode::Parallel;
  return std::nullopt;
}

uint64_t SimConfig::effective_memory_base() const {
  if (memory_base) return *memory_base;
  return target == sys::EmulationTarget::User ? 0 : 0x80000000ull;
}

const std::string& SimConfig::pipeline_for(unsigned core) const {
  return pipeline.size() == 1 ? pipeline.front() : pipeline.at(core);
}

std::optional<std::string> validate(const SimConfig& cfg) {
  if (cfg.cores == 0 || cfg.cores > 64) return "cores must be between 1 and 64";
  if (cfg.pipeline.empty()) return "no pipeline model given";
  if (cfg.pipeline.size() != 1 && cfg.pipeline.size() != cfg.cores)
    return "pipeline list has " + std::to_string(cfg.pipeline.size()) + " entries for " +
           std::to_string(cfg.cores) + " cores";
  for (const auto& p : cfg.pipeline)
    if (!pipeline::registry().id_of(p)) return "unknown pipeline model '" + p + "'";
  if (cfg.line_size != 64 && cfg.line_size != 4096) return "line size must be 64 or 4096";
  if ((cfg.memory == mem::MemoryModel::Cache || cfg.memory == mem::MemoryModel::Mesi) &&
      cfg.line_size != cfg.mem_params.l2.line)
    return "memory model '" + std::string(mem::memory_model_name(cfg.memory)) + "' requires line size " +
           std::to_string(cfg.mem_params.l2.line);
  if (cfg.mode == ExecMode::Parallel && cfg.memory != mem::MemoryModel::Atomic)
    return "parallel execution requires the atomic memory model (got '" +
           std::string(mem::memory_model_name(cfg.memory)) + "')";
  const auto pow2 = [](uint64_t v) { return v && !(v & (v - 1)); };
  const auto& m = cfg.mem_params;
  if (!pow2(m.l0_entries)) return "l0 entries must be a power of two";
  for (const auto* g : {&m.l1d, &m.l1i, &m.l2}) {
    if (g->line != 64) return "cache line size must be 64";
    if (g->ways == 0 || g->size % (uint64_t(g->ways) * g->line) != 0 || g->sets() == 0)
      return "cache size must be a multiple of ways * line";
  }
  if (m.dtlb_ways == 0 || m.dtlb_entries % m.dtlb_ways) return "dtlb entries must be a multiple of ways";
  if (m.itlb_ways == 0 || m.itlb_entries % m.itlb_ways) return "itlb entries must be a multiple of ways";
  if (cfg.memory_size < (1u << 20) || cfg.memory_size % 4096) return "memory size must be >= 1 MiB and page aligned";
  if (cfg.frequency_hz == 0) return "frequency must be nonzero";
  return std::nullopt;
}

namespace {

void expect_keys(const json& j, std::initializer_list<std::string_view> keys, std::string_view where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (auto k : keys) known = known || it.key() == k;
    if (!known) throw ConfigError("unknown key '" + it.key() + "' in " + std::string(where));
  }
}

void read_geometry(const json& j, mem::CacheGeometry& g, std::string_view where) {
  expect_keys(j, {"size", "ways", "line"}, where);
  if (j.contains("size")) g.size = j["size"].get<uint64_t>();
  if (j.contains("ways")) g.ways = j["ways"].get<unsigned>();
  if (j.contains("line")) g.line = j["line"].get<unsigned>();
}

void read_tlb(const json& j, unsigned& entries, unsigned& ways, std::string_view where) {
  expect_keys(j, {"entries", "ways"}, where);
  if (j.contains("entries")) entries = j["entries"].get<unsigned>();
  if (j.contains("ways")) ways = j["ways"].get<unsigned>();
}

void read_memory(const json& j, SimConfig& cfg) {
  expect_keys(j,
              {"model", "line_size", "l0_entries", "dtlb", "itlb", "l1d", "l1i", "l2", "latencies", "walk_latency",
               "ad_policy"},
              "memory");
  auto& p = cfg.mem_params;
  if (j.contains("model")) {
    const auto name = j["model"].get<std::string>();
    const auto m = mem::memory_model_from_name(name);
    if (!m) throw ConfigError("unknown memory model '" + name + "'");
    cfg.memory = *m;
  }
  if (j.contains("line_size")) cfg.line_size = j["line_size"].get<unsigned>();
  if (j.contains("l0_entries")) p.l0_entries = j["l0_entries"].get<unsigned>();
  if (j.contains("dtlb")) read_tlb(j["dtlb"], p.dtlb_entries, p.dtlb_ways, "memory.dtlb");
  if (j.contains("itlb")) read_tlb(j["itlb"], p.itlb_entries, p.itlb_ways, "memory.itlb");
  if (j.contains("l1d")) read_geometry(j["l1d"], p.l1d, "memory.l1d");
  if (j.contains("l1i")) read_geometry(j["l1i"], p.l1i, "memory.l1i");
  if (j.contains("l2")) read_geometry(j["l2"], p.l2, "memory.l2");
  if (j.contains("latencies")) {
    const auto& l = j["latencies"];
    expect_keys(l, {"l1_hit", "l2_hit", "memory", "coherence"}, "memory.latencies");
    if (l.contains("l1_hit")) p.latencies.l1_hit = l["l1_hit"].get<unsigned>();
    if (l.contains("l2_hit")) p.latencies.l2_hit = l["l2_hit"].get<unsigned>();
    if (l.contains("memory")) p.latencies.memory = l["memory"].get<unsigned>();
    if (l.contains("coherence")) p.latencies.coherence = l["coherence"].get<unsigned>();
  }
  if (j.contains("walk_latency")) p.walk_latency_per_level = j["walk_latency"].get<unsigned>();
  if (j.contains("ad_policy")) {
    const auto a = j["ad_policy"].get<std::string>();
    if (a == "hardware")
      p.ad = mem::AdPolicy::HardwareUpdate;
    else if (a == "trap")
      p.ad = mem::AdPolicy::TrapOnClear;
    else
      throw ConfigError("ad_policy must be 'hardware' or 'trap'");
  }
}

void read_pipeline_params(const json& j, pipeline::PipelineParams& p) {
  expect_keys(j, {"branch_penalty", "loaduse_penalty", "misaligned_fetch_penalty", "mul_latency", "div_latency"},
              "pipeline_params");
  if (j.contains("branch_penalty")) p.branch_penalty = j["branch_penalty"].get<unsigned>();
  if (j.contains("loaduse_penalty")) p.loaduse_penalty = j["loaduse_penalty"].get<unsigned>();
  if (j.contains("misaligned_fetch_penalty")) p.misaligned_fetch_penalty = j["misaligned_fetch_penalty"].get<unsigned>();
  if (j.contains("mul_latency")) p.mul_latency = j["mul_latency"].get<unsigned>();
  if (j.contains("div_latency")) p.div_latency = j["div_latency"].get<unsigned>();
}

}  // namespace

void apply_json(SimConfig& cfg, std::string_view text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    expect_keys(j,
                {"cores", "target", "pipeline", "pipeline_params", "memory", "mode", "memory_base", "memory_size",
                 "stats", "deterministic", "max_insns", "max_cycles", "dump_blocks", "shadow_l0", "check_inclusion",
                 "reset_stats_on_switch", "frequency_hz", "trap_storm_limit", "echo_console", "user_stack_size"},
                "config");
    if (j.contains("cores")) cfg.cores = j["cores"].get<unsigned>();
    if (j.contains("target")) {
      const auto t = sys::target_from_name(j["target"].get<std::string>());
      if (!t) throw ConfigError("target must be user, supervisor or machine");
      cfg.target = *t;
    }
    if (j.contains("pipeline")) {
      if (j["pipeline"].is_string())
        cfg.pipeline = {j["pipeline"].get<std::string>()};
      else
        cfg.pipeline = j["pipeline"].get<std::vector<std::string>>();
    }
    if (j.contains("pipeline_params")) read_pipeline_params(j["pipeline_params"], cfg.pipeline_params);
    if (j.contains("memory")) {
      if (j["memory"].is_string()) {
        const auto m = mem::memory_model_from_name(j["memory"].get<std::string>());
        if (!m) throw ConfigError("unknown memory model '" + j["memory"].get<std::string>() + "'");
        cfg.memory = *m;
      } else {
        read_memory(j["memory"], cfg);
      }
    }
    if (j.contains("mode")) {
      const auto m = exec_mode_from_name(j["mode"].get<std::string>());
      if (!m) throw ConfigError("mode must be lockstep or parallel");
      cfg.mode = *m;
    }
    if (j.contains("memory_base")) cfg.memory_base = j["memory_base"].get<uint64_t>();
    if (j.contains("memory_size")) cfg.memory_size = j["memory_size"].get<uint64_t>();
    if (j.contains("stats")) cfg.stats_path = j["stats"].get<std::string>();
    if (j.contains("deterministic")) cfg.deterministic = j["deterministic"].get<bool>();
    if (j.contains("max_insns")) cfg.max_insns = j["max_insns"].get<uint64_t>();
    if (j.contains("max_cycles")) cfg.max_cycles = j["max_cycles"].get<uint64_t>();
    if (j.contains("dump_blocks")) cfg.dump_blocks = j["dump_blocks"].get<bool>();
    if (j.contains("shadow_l0")) cfg.shadow_l0 = j["shadow_l0"].get<bool>();
    if (j.contains("check_inclusion")) cfg.check_inclusion = j["check_inclusion"].get<bool>();
    if (j.contains("reset_stats_on_switch")) cfg.reset_stats_on_switch = j["reset_stats_on_switch"].get<bool>();
    if (j.contains("frequency_hz")) cfg.frequency_hz = j["frequency_hz"].get<uint64_t>();
    if (j.contains("trap_storm_limit")) cfg.trap_storm_limit = j["trap_storm_limit"].get<unsigned>();
    if (j.contains("echo_console")) cfg.echo_console = j["echo_console"].get<bool>();
    if (j.contains("user_stack_size")) cfg.user_stack_size = j["user_stack_size"].get<uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config type error: ") + e.what());
  }
}

void apply_json_file(SimConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  apply_json(cfg, ss.str());
}

}  // namespace rvdbt
