#pragma once

// Table-driven reference decoder, written independently of the simulator's
// decoder: 32-bit encodings are matched against (match, mask) pairs and
// compressed encodings are first expanded to their 32-bit equivalent.

#include <cstdint>
#include <optional>
#include <string_view>

namespace rvtest {

enum class Fmt : uint8_t { R, I, Shift, S, B, U, J, Csr, CsrI, Amo, Lr, Fence, None, Sfence };

struct RefInst {
  std::string_view name;
  Fmt fmt = Fmt::None;
  unsigned rd = 0, rs1 = 0, rs2 = 0;
  int64_t imm = 0;
  uint16_t csr = 0;
  unsigned length = 4;
  uint32_t expanded = 0;  // 32-bit form
};

std::optional<RefInst> ref_decode(uint32_t raw);

/// Expands a compressed parcel to its 32-bit equivalent, or nullopt when
/// the parcel is reserved or not part of RV64C without floating point.
std::optional<uint32_t> ref_expand(uint16_t c);

}  // namespace rvtest
