#include "doctest.h"
#include "encoder.hpp"
#include "guest_util.hpp"
#include "inorder_oracle.hpp"
#include "randprog.hpp"
#include "rvdbt/pipeline.hpp"
#include "transparency.hpp"

using namespace rvdbt;
using namespace rvdbt::pipeline;

namespace {

uint64_t cost(PipelineModel& m, uint32_t raw, uint64_t pc = 0x1000, bool taken = false) {
  TranslationContext tc;
  tc.pc = pc;
  const auto d = decode(raw);
  REQUIRE(d);
  if (taken)
    m.after_taken_branch(tc, *d, d->compressed());
  else
    m.after_instruction(tc, *d, d->compressed());
  return tc.cycles;
}

struct RunResult {
  uint64_t mcycle;
  uint64_t minstret;
};

RunResult run_program(const rvtest::RandomProgram& p, const std::string& pipe) {
  Machine m(rvtest::test_config(1, pipe));
  m.load(p.image());
  m.run();
  return {m.hart(0).mcycle(), m.hart(0).minstret};
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("simple model charges one cycle per instruction and taken branch") {
    SimpleModel s;
    CHECK(cost(s, rvtest::enc::add(10, 11, 12)) == 1);
    CHECK(cost(s, rvtest::enc::lw(10, 2, 0)) == 1);
    CHECK(cost(s, rvtest::enc::beq(10, 11, 16), 0x1000, true) == 1);
  }

  TEST_CASE("atomic model does not track cycles") {
    AtomicModel a;
    CHECK_FALSE(a.tracks_cycles());
    CHECK(cost(a, rvtest::enc::add(10, 11, 12)) == 0);
  }

  TEST_CASE("in-order load-use bubble") {
    InOrderModel m;
    m.begin_block();
    CHECK(cost(m, rvtest::enc::lw(10, 11, 0)) == 1);
    CHECK(cost(m, rvtest::enc::add(12, 10, 10)) == 2);
    m.begin_block();
    CHECK(cost(m, rvtest::enc::lw(10, 11, 0)) == 1);
    CHECK(cost(m, rvtest::enc::add(12, 13, 14)) == 1);
  }

  TEST_CASE("in-order block entry clears the load-use state") {
    InOrderModel m;
    m.begin_block();
    cost(m, rvtest::enc::lw(10, 11, 0));
    m.begin_block();
    CHECK(cost(m, rvtest::enc::add(12, 10, 10)) == 1);
  }

  TEST_CASE("in-order static prediction") {
    InOrderModel m;
    const PipelineParams p;
    // forward taken mispredicts, forward not taken is free
    CHECK(cost(m, rvtest::enc::bne(1, 2, 16), 0x1000, true) == 1 + p.branch_penalty);
    CHECK(cost(m, rvtest::enc::bne(1, 2, 16)) == 1);
    // backward taken is free, backward not taken mispredicts
    CHECK(cost(m, rvtest::enc::bne(1, 2, -16), 0x1000, true) == 1);
    CHECK(cost(m, rvtest::enc::bne(1, 2, -16)) == 1 + p.branch_penalty);
    CHECK(cost(m, rvtest::enc::jal(0, 64), 0x1000, true) == 1);
    CHECK(cost(m, rvtest::enc::jalr(0, 1, 0), 0x1000, true) == 1 + p.branch_penalty);
  }

  TEST_CASE("in-order misaligned fetch penalty on taken entry") {
    InOrderModel m;
    const auto add4 = *decode(rvtest::enc::add(1, 2, 3));
    const auto addc = *decode(rvtest::enc::c_addi(1, 1));
    CHECK(m.taken_entry_penalty(add4, 0x1002) == 1);
    CHECK(m.taken_entry_penalty(add4, 0x1004) == 0);
    CHECK(m.taken_entry_penalty(addc, 0x1002) == 0);
  }

  TEST_CASE("in-order multiply and divide latencies") {
    InOrderModel m;
    CHECK(cost(m, rvtest::enc::mul(1, 2, 3)) == 3);
    CHECK(cost(m, rvtest::enc::div(1, 2, 3)) == 33);
  }

  TEST_CASE("penalties are configurable") {
    PipelineParams p;
    p.branch_penalty = 5;
    p.loaduse_penalty = 3;
    InOrderModel m(p);
    CHECK(cost(m, rvtest::enc::bne(1, 2, 16), 0x1000, true) == 6);
    cost(m, rvtest::enc::ld(5, 6, 0));
    CHECK(cost(m, rvtest::enc::add(7, 5, 0)) == 4);
  }

  TEST_CASE("registry") {
    auto& r = registry();
    CHECK(r.id_of("atomic") == kAtomicId);
    CHECK(r.id_of("simple") == kSimpleId);
    CHECK(r.id_of("inorder") == kInOrderId);
    CHECK_FALSE(r.id_of("nonsense"));
    const unsigned id = r.register_model("test-double", [](const PipelineParams&) { return std::make_unique<SimpleModel>(); });
    CHECK(r.register_model("test-double", nullptr) == id);
    CHECK(r.create(id)->name() == "simple");
  }

  TEST_CASE("model purity: the same block translates to the same annotations") {
    const uint32_t block[] = {rvtest::enc::ld(5, 6, 0), rvtest::enc::add(7, 5, 5), rvtest::enc::mul(8, 7, 7),
                              rvtest::enc::bne(8, 0, -12)};
    std::vector<uint64_t> first, second;
    InOrderModel m;
    for (auto* out : {&first, &second}) {
      m.begin_block();
      for (uint32_t w : block) out->push_back(cost(m, w));
    }
    CHECK(first == second);
  }

  TEST_CASE("simple-model identity and in-order bound on random programs") {
    for (uint64_t seed = 100; seed < 120; ++seed) {
      const auto p = rvtest::generate_program(seed);
      const auto simple = run_program(p, "simple");
      const auto inorder = run_program(p, "inorder");
      CAPTURE(seed);
      CHECK(simple.mcycle == simple.minstret);
      CHECK(inorder.minstret == simple.minstret);
      CHECK(inorder.mcycle >= simple.mcycle);
    }
  }

  TEST_CASE("in-order cycles agree with the trace oracle on random programs") {
    for (uint64_t seed = 200; seed < 230; ++seed) {
      const auto p = rvtest::generate_program(seed);
      rvtest::RefInterp ref(rvtest::RandomProgram::kCodeBase, 1 << 20);
      ref.load(p.image());
      rvtest::InOrderOracle oracle;
      ref.trace = [&](const rvtest::TraceRecord& r) { oracle.step(r); };
      ref.run(1'000'000);
      REQUIRE(ref.status == rvtest::RefInterp::Status::Exited);
      CAPTURE(seed);
      CHECK(run_program(p, "inorder").mcycle == oracle.total());
    }
  }
}
