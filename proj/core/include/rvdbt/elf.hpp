#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rvdbt {

class ElfError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ElfSegment {
  uint64_t vaddr = 0;
  uint64_t paddr = 0;
  uint64_t memsz = 0;
  uint32_t flags = 0;
  std::vector<uint8_t> data;  // file contents; the rest up to memsz is zero
};

/// A 64-bit little-endian RISC-V executable.
struct ElfImage {
  uint64_t entry = 0;
  std::vector<ElfSegment> segments;
  std::map<std::string, uint64_t> symbols;

  std::optional<uint64_t> symbol(const std::string& name) const;
  /// One past the highest virtual address of any segment.
  uint64_t end_vaddr() const;
};

ElfImage parse_elf(std::span<const uint8_t> bytes);
ElfImage read_elf_file(const std::string& path);

}  // namespace rvdbt
