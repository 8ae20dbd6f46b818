#include "inorder_oracle.hpp"

#include <string_view>

namespace rvtest {

namespace {

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

bool reads_rs1(const RefInst& i) {
  switch (i.fmt) {
    case Fmt::R: case Fmt::I: case Fmt::Shift: case Fmt::S: case Fmt::B: case Fmt::Csr: case Fmt::Amo:
    case Fmt::Lr: case Fmt::Sfence:
      return true;
    default:
      return false;
  }
}

bool reads_rs2(const RefInst& i) {
  return i.fmt == Fmt::R || i.fmt == Fmt::S || i.fmt == Fmt::B || i.fmt == Fmt::Amo || i.fmt == Fmt::Sfence;
}

bool writes_csr(const RefInst& i) {
  if (i.fmt != Fmt::Csr && i.fmt != Fmt::CsrI) return false;
  const bool plain_write = i.name == "csrrw" || i.name == "csrrwi";
  return plain_write || i.rs1 != 0;
}

}  // namespace

uint64_t InOrderOracle::step(const TraceRecord& r) {
  const RefInst& in = *r.inst;
  const std::string_view n = in.name;
  const bool straddles = in.length == 4 && ((r.pc + 2) & 0xfff) == 0;
  if (straddles && !block_start_) {
    block_start_ = true;
    entered_taken_ = false;
  }
  if (block_start_) {
    block_len_ = 0;
    load_dest_.reset();
    if (entered_taken_ && in.length == 4 && (r.pc & 3) == 2) total_ += p_.misaligned_fetch;
    block_start_ = false;
  }
  const uint64_t visible = total_;

  uint64_t cost = 1;
  if (load_dest_ && ((reads_rs1(in) && in.rs1 == *load_dest_) || (reads_rs2(in) && in.rs2 == *load_dest_)))
    cost += p_.loaduse;
  if (starts_with(n, "mul")) cost += p_.mul;
  if (starts_with(n, "div") || starts_with(n, "rem")) cost += p_.div;
  const bool branch = in.fmt == Fmt::B;
  if (branch) {
    const bool forward = in.imm > 0;
    if (r.taken == forward) cost += p_.branch;
  }
  if (n == "jalr") cost += p_.branch;
  total_ += cost;

  const bool loads = in.fmt == Fmt::Lr || (in.fmt == Fmt::Amo && !starts_with(n, "sc")) ||
                     (in.fmt == Fmt::I && n[0] == 'l');
  if (loads && in.rd != 0)
    load_dest_ = in.rd;
  else
    load_dest_.reset();

  ++block_len_;
  const bool transfer = branch || in.fmt == Fmt::J || n == "jalr";
  const bool ends = transfer || in.fmt == Fmt::None || writes_csr(in) || n == "fence.i" || n == "sfence.vma";
  const uint64_t next_pc = r.pc + in.length;
  if (ends || straddles || (next_pc & 0xfff) == 0 || block_len_ >= 256) {
    block_start_ = true;
    entered_taken_ = r.taken || n == "ebreak" || n == "mret" || n == "sret";
  }
  return visible;
}

}  // namespace rvtest
