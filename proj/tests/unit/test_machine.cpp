#include <set>

#include "doctest.h"
#include "encoder.hpp"
#include "guest_util.hpp"
#include "rvdbt/csr.hpp"
#include "rvdbt/machine.hpp"
#include "rvdbt/stats.hpp"

using namespace rvdbt;
using namespace rvtest;
namespace enc = rvtest::enc;

namespace {

std::unique_ptr<Machine> run_guest(const std::string& name, SimConfig cfg,
                                   const std::map<std::string, uint64_t>& patches = {}) {
  auto m = load_machine(cfg, guest_image(name), patches);
  m->run();
  return m;
}

uint64_t sum_over_cores(const Machine& m, const std::string& suffix) {
  uint64_t total = 0;
  const auto c = collect_counters(m);
  for (unsigned i = 0; i < m.cores(); ++i) total += c.at("core" + std::to_string(i) + "." + suffix);
  return total;
}

}  // namespace

TEST_SUITE("machine") {
  TEST_CASE("hazard kernels run to completion under every pipeline") {
    for (const char* p : {"atomic", "simple", "inorder"}) {
      CAPTURE(p);
      auto m = run_guest("hazards", test_config(1, p));
      CHECK(m->stop_reason() == StopReason::Exit);
      CHECK(m->exit_code() == 0);
    }
  }

  TEST_CASE("spinlock counts every increment") {
    for (auto mem : {mem::MemoryModel::Atomic, mem::MemoryModel::Mesi}) {
      auto m = run_guest("spinlock", test_config(3, "inorder", mem), {{"spin_iters", 150}});
      REQUIRE(m->exit_code() == 0);
      CHECK(read_symbol(*m, "spin_counter") == 450);
      const uint64_t acq = m->memory().read<uint64_t>(*guest_image("spinlock").symbol("spin_acquired"));
      CHECK(acq == 150);
    }
  }

  TEST_CASE("matmul under Simple retires one instruction per cycle") {
    auto m = run_guest("matmul", test_config(2, "simple"), {{"matmul_reps", 2}});
    REQUIRE(m->exit_code() == 0);
    for (unsigned i = 0; i < 2; ++i) CHECK(m->hart(i).mcycle() == m->hart(i).minstret);
  }

  TEST_CASE("crosspage retranslates once after the remap") {
    SimConfig cfg = test_config(1, "simple", mem::MemoryModel::Tlb);
    cfg.target = sys::EmulationTarget::Supervisor;
    auto m = run_guest("crosspage", cfg);
    REQUIRE(m->exit_code() == 0);
    CHECK(read_symbol(*m, "crosspage_first") == 101);
    CHECK(read_symbol(*m, "crosspage_second") == 102);
    CHECK(m->hart(0).code.stats.retranslations == 1);
  }

  TEST_CASE("interrupts between harts and the timer") {
    auto m = run_guest("ipi", test_config(4, "simple"));
    CHECK(m->exit_code() == 0);
    CHECK(read_symbol(*m, "timer_fired") != 0);
  }

  TEST_CASE("user-mode programs") {
    SimConfig cfg = test_config(1);
    cfg.target = sys::EmulationTarget::User;
    Machine m(cfg);
    m.load(guest_image("user_hello"), {"user_hello"});
    CHECK(m.run() == 0);
    CHECK(m.console().find("hello from user mode") != std::string::npos);

    SimConfig tcfg = test_config(4, "inorder", mem::MemoryModel::Mesi);
    tcfg.target = sys::EmulationTarget::User;
    Machine t(tcfg);
    t.load(guest_image("user_threads"), {"user_threads"});
    CHECK(t.run() == 0);
    CHECK(t.console().find("threads ok") != std::string::npos);
  }

  TEST_CASE("user argv reaches main") {
    SimConfig cfg = test_config(1);
    cfg.target = sys::EmulationTarget::User;
    Machine m(cfg);
    m.load(guest_image("user_hello"), {"user_hello", "x", "y"});
    CHECK(m.run() == 3);
    CHECK(m.console().find("x\ny\n") != std::string::npos);
  }

  TEST_CASE("instruction limit stops the machine") {
    SimConfig cfg = test_config(2);
    cfg.max_insns = 5000;
    auto m = run_guest("matmul", cfg);
    CHECK(m->stop_reason() == StopReason::InsnLimit);
    CHECK(m->hart(0).minstret >= 5000);
    CHECK(m->hart(0).minstret < 5000 + 300);
  }

  TEST_CASE("FENCE.I flushes only the executing core's code cache") {
    using namespace enc;
    const std::vector<uint32_t> w = {bne(10, 0, 28), fence_i(), lui(17, 0x53525), addi(17, 17, 0x354),
                                     addi(16, 0, 0),  addi(10, 0, 0), addi(11, 0, 0), ecall(),
                                     jal(0, 0)};
    Machine m(test_config(2));
    m.load(words_image(w));
    m.run();
    REQUIRE(m.stop_reason() == StopReason::Exit);
    CHECK(m.hart(0).code.stats.flushes == 1);
    CHECK(m.hart(1).code.stats.flushes == 0);
  }

  TEST_CASE("rendezvous aligns every clock before the switch") {
    std::vector<uint64_t> clocks;
    auto m = load_machine(test_config(4), guest_image("roi"), {{"roi_iters", 40}});
    m->on_rendezvous = [&](Machine& mm) {
      for (unsigned i = 0; i < mm.cores(); ++i) clocks.push_back(mm.hart(i).ctx.local_clock);
      CHECK(mm.runtime().memory == mem::MemoryModel::Mesi);
    };
    m->run();
    REQUIRE(m->exit_code() == 0);
    CHECK(m->rendezvous_count() == 1);
    REQUIRE(clocks.size() == 4);
    CHECK(std::set<uint64_t>(clocks.begin(), clocks.end()).size() == 1);
    for (unsigned i = 0; i < 4; ++i) CHECK(m->hart(i).model_id == pipeline::kInOrderId);
  }

  TEST_CASE("parallel mode runs the atomic model on threads") {
    SimConfig cfg = test_config(4, "atomic");
    cfg.mode = ExecMode::Parallel;
    cfg.deterministic = false;
    auto m = run_guest("matmul", cfg, {{"matmul_reps", 2}});
    CHECK(m->exit_code() == 0);
    CHECK(read_symbol(*m, "matmul_done") == 3);  // secondaries only
    auto ref = run_guest("matmul", test_config(4, "atomic"), {{"matmul_reps", 2}});
    const uint64_t sums = *guest_image("matmul").symbol("matmul_sums");
    for (unsigned i = 0; i < 4; ++i) CHECK(m->memory().read<uint64_t>(sums + 8 * i) == ref->memory().read<uint64_t>(sums + 8 * i));
  }

  TEST_CASE("deterministic lockstep runs repeat exactly") {
    auto a = run_guest("spinlock", test_config(4, "inorder", mem::MemoryModel::Mesi), {{"spin_iters", 100}});
    auto b = run_guest("spinlock", test_config(4, "inorder", mem::MemoryModel::Mesi), {{"spin_iters", 100}});
    CHECK(a->trace_hash() == b->trace_hash());
    CHECK(make_report(*a).to_kv() == make_report(*b).to_kv());
  }

  TEST_CASE("shadow L0 and inclusion checks stay clean") {
    SimConfig cfg = test_config(2, "simple", mem::MemoryModel::Mesi);
    cfg.shadow_l0 = true;
    cfg.check_inclusion = true;
    auto m = run_guest("memstress", cfg, {{"stress_ops", 5000}});
    REQUIRE(m->exit_code() == 0);
    CHECK(sum_over_cores(*m, "shadow.divergences") == 0);
    CHECK(sum_over_cores(*m, "inclusion.violations") == 0);
    CHECK(sum_over_cores(*m, "shadow.checks") > 0);
  }
}

TEST_SUITE("stats") {
  TEST_CASE("report round-trips through the parser") {
    auto m = run_guest("spinlock", test_config(2, "inorder", mem::MemoryModel::Mesi), {{"spin_iters", 50}});
    const StatsReport r = make_report(*m);
    const auto parsed = parse_stats(r.to_kv());
    CHECK(parsed.size() == r.entries().size());
    CHECK(parsed.at("sim.cores") == "2");
    CHECK(parsed.at("core1.pipeline") == "inorder");
    CHECK(r.get_u64("core0.minstret") == m->hart(0).minstret);
    CHECK_FALSE(r.get("host.wall_seconds"));  // deterministic run
  }

  TEST_CASE("L0 hits count as TLB and L1 hits") {
    auto m = run_guest("memlat", test_config(1, "simple", mem::MemoryModel::Cache),
                       {{"memlat_ws", 16384}, {"memlat_accesses", 20000}});
    const auto c = collect_counters(*m);
    CHECK(c.at("core0.l0d.hit") > 0);
    CHECK(c.at("core0.l1d.hit") >= c.at("core0.l0d.hit"));
    CHECK(c.at("core0.dtlb.hit") >= c.at("core0.l0d.hit"));
  }

  TEST_CASE("roi keys are deltas from the switch") {
    auto m = run_guest("roi", test_config(2), {{"roi_iters", 30}});
    const StatsReport r = make_report(*m);
    REQUIRE(r.get_u64("roi.core0.minstret"));
    CHECK(*r.get_u64("roi.core0.minstret") == m->hart(0).minstret - m->roi_baseline().at("core0.minstret"));
    CHECK(*r.get_u64("roi.core0.minstret") < m->hart(0).minstret);
  }

  TEST_CASE("parser skips comments and blank lines") {
    const auto p = parse_stats("# header\n\na=1\nb = two\n");
    CHECK(p.size() == 2);
    CHECK(p.at("a") == "1");
  }
}
