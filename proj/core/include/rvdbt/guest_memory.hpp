#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>

namespace rvdbt {

/// Flat guest physical RAM at [base, base + size). Backed by an anonymous
/// page-aligned mapping so untouched memory costs nothing and line-aligned
/// guest addresses map to line-aligned host addresses.
class GuestMemory {
 public:
  GuestMemory(uint64_t base, uint64_t size);
  ~GuestMemory();
  GuestMemory(const GuestMemory&) = delete;
  GuestMemory& operator=(const GuestMemory&) = delete;

  uint64_t base() const { return base_; }
  uint64_t size() const { return size_; }
  uint64_t end() const { return base_ + size_; }

  bool contains(uint64_t paddr, uint64_t len = 1) const {
    return paddr >= base_ && len <= size_ && paddr - base_ <= size_ - len;
  }

  uint8_t* host(uint64_t paddr) { return data_ + (paddr - base_); }
  const uint8_t* host(uint64_t paddr) const { return data_ + (paddr - base_); }

  /// Maps a host pointer inside the RAM back to its guest physical address.
  uint64_t paddr_of(const uint8_t* p) const { return base_ + static_cast<uint64_t>(p - data_); }

  std::span<uint8_t> bytes() { return {data_, size_}; }
  std::span<const uint8_t> bytes() const { return {data_, size_}; }

  template <typename T>
  T read(uint64_t paddr) const {
    T v;
    std::memcpy(&v, host(paddr), sizeof(T));
    return v;
  }

  template <typename T>
  void write(uint64_t paddr, T v) {
    std::memcpy(host(paddr), &v, sizeof(T));
  }

  void write_bytes(uint64_t paddr, std::span<const uint8_t> src) {
    std::memcpy(host(paddr), src.data(), src.size());
  }

 private:
  uint64_t base_;
  uint64_t size_;
  uint8_t* data_ = nullptr;
};

}  // namespace rvdbt
