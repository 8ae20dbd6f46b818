// rvdbt: run a RISC-V guest under the binary translator.

#include <spdlog/spdlog.h>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "rvdbt/config.hpp"
#include "rvdbt/elf.hpp"
#include "rvdbt/machine.hpp"
#include "rvdbt/stats.hpp"

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  size_t start = 0;
  for (;;) {
    const size_t comma = s.find(',', start);
    out.push_back(s.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RISC-V dynamic binary translator with pluggable timing models"};
  app.set_version_flag("--version", "rvdbt 0.1.0");

  std::string config_path, target, pipeline, memory, mode, stats_path, log_level = "warn";
  unsigned cores = 0, line_size = 0;
  uint64_t max_insns = 0, max_cycles = 0;
  bool dump_blocks = false, deterministic = false, shadow_l0 = false, check_inclusion = false, quiet = false;
  bool summary = false;
  std::vector<std::string> guest;

  app.add_option("--config", config_path, "JSON configuration file (flags override it)")->check(CLI::ExistingFile);
  auto* o_cores = app.add_option("--cores", cores, "number of harts")->check(CLI::Range(1, 64));
  auto* o_target = app.add_option("--target", target, "emulation target")
                       ->check(CLI::IsMember({"user", "supervisor", "machine"}));
  auto* o_pipe = app.add_option("--pipeline", pipeline, "pipeline model, or a comma list with one per core");
  auto* o_mem = app.add_option("--memory", memory, "memory model")->check(CLI::IsMember({"atomic", "tlb", "cache", "mesi"}));
  auto* o_line = app.add_option("--line-size", line_size, "L0 line size in bytes")->check(CLI::IsMember({64, 4096}));
  auto* o_mode = app.add_option("--mode", mode, "execution mode")->check(CLI::IsMember({"lockstep", "parallel"}));
  auto* o_stats = app.add_option("--stats", stats_path, "write key=value statistics to this file ('-' for stdout)");
  auto* o_insns = app.add_option("--max-insns", max_insns, "stop once any core retires this many instructions");
  auto* o_cycles = app.add_option("--max-cycles", max_cycles, "stop once any core reaches this cycle");
  auto* o_dump = app.add_flag("--dump-blocks", dump_blocks, "print every translated block to stderr");
  auto* o_det = app.add_flag("--deterministic", deterministic, "omit host timing from the statistics");
  auto* o_shadow = app.add_flag("--shadow-l0", shadow_l0, "check every L0 hit against the slow path");
  auto* o_incl = app.add_flag("--check-inclusion", check_inclusion, "scan L0 inclusion after every slow-path access");
  app.add_flag("--summary", summary, "print a human-readable summary to stderr");
  app.add_flag("-q,--quiet", quiet, "do not echo guest console output");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
  app.add_option("guest", guest, "guest ELF followed by its arguments")->required();
  app.allow_extras(false);
  app.prefix_command(false);
  // Everything after the ELF belongs to the guest.
  app.positionals_at_end(true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version are successes; every other parse error is a usage error
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));
  spdlog::set_pattern("rvdbt: %l: %v");

  rvdbt::SimConfig cfg;
  try {
    if (!config_path.empty()) rvdbt::apply_json_file(cfg, config_path);
    if (o_cores->count()) cfg.cores = cores;
    if (o_target->count()) cfg.target = *rvdbt::sys::target_from_name(target);
    if (o_pipe->count()) cfg.pipeline = split_commas(pipeline);
    if (o_mem->count()) cfg.memory = *rvdbt::mem::memory_model_from_name(memory);
    if (o_line->count()) cfg.line_size = line_size;
    if (o_mode->count()) cfg.mode = *rvdbt::exec_mode_from_name(mode);
    if (o_stats->count()) cfg.stats_path = stats_path;
    if (o_insns->count()) cfg.max_insns = max_insns;
    if (o_cycles->count()) cfg.max_cycles = max_cycles;
    if (o_dump->count()) cfg.dump_blocks = true;
    if (o_det->count()) cfg.deterministic = true;
    if (o_shadow->count()) cfg.shadow_l0 = true;
    if (o_incl->count()) cfg.check_inclusion = true;
    if (quiet) cfg.echo_console = false;
    if (auto err = rvdbt::validate(cfg)) throw rvdbt::ConfigError(*err);
  } catch (const rvdbt::ConfigError& e) {
    std::fprintf(stderr, "rvdbt: configuration error: %s\n", e.what());
    return 2;
  }

  int code = 0;
  try {
    rvdbt::Machine m(cfg);
    m.load_file(guest.front(), guest);
    code = m.run();
    std::fflush(stdout);
    if (m.stop_reason() == rvdbt::StopReason::Error)
      std::fprintf(stderr, "rvdbt: run failed: %s\n", m.stop_message().c_str());
    if (summary) std::fputs(rvdbt::summary_text(m).c_str(), stderr);
    if (!cfg.stats_path.empty()) {
      const std::string text = rvdbt::make_report(m).to_kv();
      if (cfg.stats_path == "-") {
        std::fputs(text.c_str(), stdout);
      } else {
        std::ofstream out(cfg.stats_path);
        if (!out) {
          std::fprintf(stderr, "rvdbt: cannot write %s\n", cfg.stats_path.c_str());
          return 2;
        }
        out << text;
      }
    }
  } catch (const rvdbt::ConfigError& e) {
    std::fprintf(stderr, "rvdbt: configuration error: %s\n", e.what());
    return 2;
  } catch (const rvdbt::ElfError& e) {
    std::fprintf(stderr, "rvdbt: cannot load %s: %s\n", guest.front().c_str(), e.what());
    return 2;
  }
  return code;
}
