#include "rvdbt/stats.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>

#include "rvdbt/machine.hpp"

namespace rvdbt {

void StatsReport::add(const std::string& key, uint64_t value) { entries_.emplace_back(key, std::to_string(value)); }

void StatsReport::add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }

std::optional<std::string> StatsReport::get(std::string_view key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  return std::nullopt;
}

std::optional<uint64_t> StatsReport::get_u64(std::string_view key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || p != v->data() + v->size()) return std::nullopt;
  return out;
}

std::string StatsReport::to_kv() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::map<std::string, uint64_t> collect_counters(const Machine& m) {
  std::map<std::string, uint64_t> c;
  const mem::MemorySystem& ms = m.memsys();
  const bool tlb = ms.model() != mem::MemoryModel::Atomic;
  const mem::CacheHierarchy* caches = ms.caches();
  for (unsigned i = 0; i < m.cores(); ++i) {
    const Hart& h = m.hart(i);
    const mem::CoreMem& cm = ms.core(i);
    const std::string p = "core" + std::to_string(i) + ".";
    c[p + "minstret"] = h.minstret;
    c[p + "mcycle"] = h.ctx.local_clock + h.ctx.pending_cycles;
    c[p + "blocks.translated"] = h.code.stats.translations;
    c[p + "blocks.retranslated"] = h.code.stats.retranslations;
    c[p + "blocks.executed"] = h.stats.blocks_executed;
    c[p + "blocks.chained"] = h.stats.chained;
    c[p + "blocks.dispatched"] = h.stats.dispatches;
    c[p + "code.decodes"] = h.code.stats.decodes;
    c[p + "code.flushes"] = h.code.stats.flushes;
    c[p + "code.partial_flushes"] = h.code.stats.partial_flushes;
    c[p + "code.links"] = h.code.stats.links_installed;
    c[p + "traps"] = h.stats.traps;
    c[p + "interrupts"] = h.stats.interrupts;
    c[p + "wfi"] = h.stats.wfi_waits;
    c[p + "futex_waits"] = h.stats.futex_waits;
    c[p + "ifetch"] = h.stats.ifetch_accesses;
    c[p + "l0d.hit"] = cm.stats.l0d_hits;
    c[p + "l0d.miss"] = cm.stats.l0d_misses;
    c[p + "l0i.hit"] = cm.stats.l0i_hits;
    c[p + "l0i.miss"] = cm.stats.l0i_misses;
    c[p + "walks"] = cm.stats.walks;
    c[p + "faults"] = cm.stats.faults;
    if (m.config().shadow_l0) {
      c[p + "shadow.checks"] = cm.stats.shadow_checks;
      c[p + "shadow.divergences"] = cm.stats.shadow_divergences;
    }
    if (m.config().check_inclusion) {
      c[p + "inclusion.scans"] = cm.stats.inclusion_scans;
      c[p + "inclusion.violations"] = cm.stats.inclusion_violations;
    }
    if (tlb) {
      c[p + "dtlb.hit"] = cm.dtlb.stats.hits + cm.stats.l0d_hits;
      c[p + "dtlb.miss"] = cm.dtlb.stats.misses;
      c[p + "dtlb.evict"] = cm.dtlb.stats.evictions;
      c[p + "itlb.hit"] = cm.itlb.stats.hits + cm.stats.l0i_hits;
      c[p + "itlb.miss"] = cm.itlb.stats.misses;
      c[p + "itlb.evict"] = cm.itlb.stats.evictions;
    }
    if (caches) {
      const auto& d = caches->l1d(i).stats;
      const auto& in = caches->l1i(i).stats;
      c[p + "l1d.hit"] = d.hits + cm.stats.l0d_hits;
      c[p + "l1d.miss"] = d.misses;
      c[p + "l1d.evict"] = d.evictions;
      c[p + "l1d.writeback"] = d.writebacks;
      c[p + "l1i.hit"] = in.hits + cm.stats.l0i_hits;
      c[p + "l1i.miss"] = in.misses;
      c[p + "l1i.evict"] = in.evictions;
    }
  }
  if (caches) {
    c["mem.l2.hit"] = caches->l2_stats.hits;
    c["mem.l2.miss"] = caches->l2_stats.misses;
    c["mem.l2.evict"] = caches->l2_stats.evictions;
    c["mem.l2.writeback"] = caches->l2_stats.writebacks;
    c["mem.memory.writebacks"] = caches->memory_writebacks;
    if (caches->coherent()) {
      c["mem.coherence.invalidations"] = caches->coherence.invalidations;
      c["mem.coherence.downgrades"] = caches->coherence.downgrades;
      c["mem.coherence.upgrades"] = caches->coherence.upgrades;
      c["mem.coherence.back_invalidations"] = caches->coherence.back_invalidations;
    }
  }
  return c;
}

StatsReport make_report(const Machine& m) {
  StatsReport r;
  const SimConfig& cfg = m.config();
  const RuntimeConfig rt = m.runtime();
  r.add("sim.target", std::string(sys::target_name(cfg.target)));
  r.add("sim.cores", m.cores());
  r.add("sim.memory", std::string(mem::memory_model_name(rt.memory)));
  r.add("sim.line_size", rt.line_size);
  r.add("sim.mode", std::string(exec_mode_name(rt.mode)));
  r.add("sim.exit_code", static_cast<uint64_t>(static_cast<uint32_t>(m.exit_code())));
  r.add("sim.stop_reason", std::string(stop_reason_name(m.stop_reason())));
  r.add("sim.rendezvous", m.rendezvous_count());
  r.add("sim.deadlocks", m.deadlocks());
  for (unsigned i = 0; i < m.cores(); ++i)
    r.add("core" + std::to_string(i) + ".pipeline", pipeline::registry().name_of(m.hart(i).model_id).value_or("?"));
  r.add("sched.context_switches", m.context_switches());
  r.add("sched.trace_hash", m.trace_hash());
  const auto counters = collect_counters(m);
  uint64_t insns = 0;
  for (const auto& [k, v] : counters) {
    r.add(k, v);
    if (k.ends_with(".minstret")) insns += v;
  }
  r.add("sim.minstret", insns);
  if (m.roi_active()) {
    for (const auto& [k, v] : counters) {
      const auto it = m.roi_baseline().find(k);
      const uint64_t base = it == m.roi_baseline().end() ? 0 : it->second;
      r.add("roi." + k, v >= base ? v - base : 0);
    }
  }
  if (!cfg.deterministic) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", m.wall_seconds());
    r.add("host.wall_seconds", std::string(buf));
    const double mips = m.wall_seconds() > 0 ? insns / m.wall_seconds() / 1e6 : 0.0;
    std::snprintf(buf, sizeof buf, "%.3f", mips);
    r.add("host.mips", std::string(buf));
  }
  return r;
}

std::string summary_text(const Machine& m) {
  const auto c = collect_counters(m);
  auto get = [&](const std::string& k) {
    const auto it = c.find(k);
    return it == c.end() ? uint64_t(0) : it->second;
  };
  auto pct = [](uint64_t hit, uint64_t miss) { return hit + miss ? 100.0 * hit / (hit + miss) : 0.0; };
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "stopped: %s (exit code %d)%s%s\n", std::string(stop_reason_name(m.stop_reason())).c_str(),
                m.exit_code(), m.stop_message().empty() ? "" : ": ", m.stop_message().c_str());
  out += line;
  for (unsigned i = 0; i < m.cores(); ++i) {
    const std::string p = "core" + std::to_string(i) + ".";
    const uint64_t insns = get(p + "minstret");
    const uint64_t cycles = get(p + "mcycle");
    std::snprintf(line, sizeof line, "core %u: %" PRIu64 " insns, %" PRIu64 " cycles, CPI %.3f, L0D hit %.2f%%, L0I hit %.2f%%\n",
                  i, insns, cycles, insns ? double(cycles) / insns : 0.0, pct(get(p + "l0d.hit"), get(p + "l0d.miss")),
                  pct(get(p + "l0i.hit"), get(p + "l0i.miss")));
    out += line;
    if (c.count(p + "l1d.hit")) {
      std::snprintf(line, sizeof line, "        L1D hit %.2f%%, L1I hit %.2f%%\n", pct(get(p + "l1d.hit"), get(p + "l1d.miss")),
                    pct(get(p + "l1i.hit"), get(p + "l1i.miss")));
      out += line;
    }
  }
  if (c.count("mem.l2.hit")) {
    std::snprintf(line, sizeof line, "L2 hit %.2f%%\n", pct(get("mem.l2.hit"), get("mem.l2.miss")));
    out += line;
  }
  if (!m.config().deterministic) {
    std::snprintf(line, sizeof line, "host: %.3f s\n", m.wall_seconds());
    out += line;
  }
  return out;
}

std::map<std::string, std::string> parse_stats(std::string_view text) {
  std::map<std::string, std::string> out;
  while (!text.empty()) {
    const size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty() || line.front() == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos) continue;
    out.emplace(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
  }
  return out;
}

}  // namespace rvdbt
