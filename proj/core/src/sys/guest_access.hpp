#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>

#include "rvdbt/hart.hpp"

namespace rvdbt::sys {

/// Copies between host buffers and guest virtual memory using the hart's
/// data regime, page by page. Bypasses the timing models.
inline bool copy_from_guest(Hart& h, uint64_t va, void* dst, size_t n) {
  auto* out = static_cast<uint8_t*>(dst);
  while (n) {
    const size_t chunk = std::min<uint64_t>(n, 4096 - (va & 0xfff));
    const auto pa = h.memsys.translate_functional(h.data_regime, va, mem::AccessKind::Read);
    if (!pa || !h.memsys.memory().contains(*pa, chunk)) return false;
    std::memcpy(out, h.memsys.memory().host(*pa), chunk);
    out += chunk;
    va += chunk;
    n -= chunk;
  }
  return true;
}

inline bool copy_to_guest(Hart& h, uint64_t va, const void* src, size_t n) {
  auto* in = static_cast<const uint8_t*>(src);
  while (n) {
    const size_t chunk = std::min<uint64_t>(n, 4096 - (va & 0xfff));
    const auto pa = h.memsys.translate_functional(h.data_regime, va, mem::AccessKind::Write);
    if (!pa || !h.memsys.memory().contains(*pa, chunk)) return false;
    std::memcpy(h.memsys.memory().host(*pa), in, chunk);
    in += chunk;
    va += chunk;
    n -= chunk;
  }
  return true;
}

inline bool fill_guest(Hart& h, uint64_t va, uint8_t byte, size_t n) {
  while (n) {
    const size_t chunk = std::min<uint64_t>(n, 4096 - (va & 0xfff));
    const auto pa = h.memsys.translate_functional(h.data_regime, va, mem::AccessKind::Write);
    if (!pa || !h.memsys.memory().contains(*pa, chunk)) return false;
    std::memset(h.memsys.memory().host(*pa), byte, chunk);
    va += chunk;
    n -= chunk;
  }
  return true;
}

}  // namespace rvdbt::sys
