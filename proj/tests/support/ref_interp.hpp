#pragma once

// Plain fetch-decode-execute interpreter for one RV64IMAC hart in machine
// mode. It shares nothing with the translator and serves as the functional
// oracle. Counters read as the retired-instruction count, SBI calls are
// emulated for a single hart and WFI is a no-op.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "ref_decoder.hpp"

namespace rvdbt {
struct ElfImage;
}

namespace rvtest {

struct TraceRecord {
  uint64_t pc = 0;
  const RefInst* inst = nullptr;
  bool taken = false;  // control left the sequential path
};

class RefInterp {
 public:
  enum class Status { Running, Exited, Error };

  RefInterp(uint64_t base, uint64_t size);

  void load(const rvdbt::ElfImage& image);
  void write_bytes(uint64_t addr, const void* src, size_t n);
  uint64_t read_u64(uint64_t addr) const;
  void write_u64(uint64_t addr, uint64_t v);

  Status step();
  /// Runs until exit, error or `max_steps` instructions.
  Status run(uint64_t max_steps);

  uint64_t x[32] = {};
  uint64_t pc = 0;
  uint64_t instret = 0;
  uint64_t hartid = 0;
  uint64_t base;
  std::vector<uint8_t> mem;
  std::map<uint16_t, uint64_t> csrs;
  std::string console;
  int exit_code = 0;
  std::string error;
  Status status = Status::Running;
  std::function<void(const TraceRecord&)> trace;

 private:
  struct Cached {
    uint32_t raw = 0;
    RefInst inst;
    int op = -1;
  };
  bool in_range(uint64_t a, unsigned n) const { return a >= base && a - base <= mem.size() - n; }
  bool load_mem(uint64_t a, unsigned n, uint64_t& out);
  bool store_mem(uint64_t a, unsigned n, uint64_t v);
  Status fail(const std::string& what);
  bool csr_access(uint16_t c, bool write, uint64_t wval, uint64_t& old);
  void sbi();

  std::unordered_map<uint64_t, Cached> cache_;
  bool resv_valid_ = false;
  uint64_t resv_addr_ = 0;
};

}  // namespace rvtest
