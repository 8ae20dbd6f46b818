#include "transparency.hpp"

#include <sstream>

#include "guest_util.hpp"
#include "rvdbt/machine.hpp"

namespace rvtest {

std::unique_ptr<RefInterp> run_reference(const RandomProgram& p) {
  auto ref = std::make_unique<RefInterp>(RandomProgram::kCodeBase, 1 << 20);
  ref->load(p.image());
  ref->run(1'000'000);
  return ref;
}

std::string compare_with_reference(const RandomProgram& p, const RefInterp& ref, const rvdbt::SimConfig& cfg) {
  std::ostringstream out;
  if (ref.status != RefInterp::Status::Exited) return "reference did not exit: " + ref.error;
  rvdbt::Machine m(cfg);
  m.load(p.image());
  const int code = m.run();
  if (m.stop_reason() != rvdbt::StopReason::Exit) return "simulator stopped: " + m.stop_message();
  if (code != ref.exit_code) out << "exit code " << code << " vs " << ref.exit_code << "; ";
  const rvdbt::Hart& h = m.hart(0);
  for (unsigned r = 1; r < 32; ++r)
    if (h.x[r] != ref.x[r]) out << "x" << r << " 0x" << std::hex << h.x[r] << " vs 0x" << ref.x[r] << std::dec << "; ";
  if (h.minstret != ref.instret) out << "minstret " << h.minstret << " vs " << ref.instret << "; ";
  if (const auto a = first_difference(m, ref, RandomProgram::kCodeBase, RandomProgram::kCodeBase + (1 << 20)))
    out << "memory differs at 0x" << std::hex << *a << "; ";
  return out.str();
}

}  // namespace rvtest
