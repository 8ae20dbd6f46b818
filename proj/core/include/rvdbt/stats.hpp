#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rvdbt {

class Machine;

/// Ordered key=value statistics as written by --stats.
class StatsReport {
 public:
  void add(const std::string& key, uint64_t value);
  void add(const std::string& key, const std::string& value);

  std::optional<std::string> get(std::string_view key) const;
  std::optional<uint64_t> get_u64(std::string_view key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  std::string to_kv() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Every numeric counter of the run, keyed as in the report. L0 hits are
/// folded into the TLB and L1 hit counts they stand in for.
std::map<std::string, uint64_t> collect_counters(const Machine& m);

/// Counters plus run information. Wall-clock derived values are left out
/// when the configuration asks for deterministic output. After a runtime
/// reconfiguration the counters are repeated as roi.* deltas.
StatsReport make_report(const Machine& m);

/// Short human-readable summary.
std::string summary_text(const Machine& m);

/// Parses key=value lines; blank lines and lines starting with '#' are skipped.
std::map<std::string, std::string> parse_stats(std::string_view text);

}  // namespace rvdbt
