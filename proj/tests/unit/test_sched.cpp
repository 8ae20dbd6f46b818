#include <random>
#include <vector>

#include "doctest.h"
#include "rvdbt/sched.hpp"

using namespace rvdbt::sched;

namespace {

struct Log {
  std::vector<std::pair<int, uint64_t>> runs;  // (core, clock) at each resumption point
};

}  // namespace

TEST_SUITE("sched") {
  TEST_CASE("two cores yielding one cycle alternate in core order") {
    EventQueue ev;
    Scheduler s(ev);
    ExecutionContext a, b;
    a.core_index = 0;
    b.core_index = 1;
    Log log;
    for (ExecutionContext* c : {&a, &b})
      s.add(*c, [&, c] {
        for (int i = 0; i < 4; ++i) {
          log.runs.emplace_back(int(c->core_index), c->local_clock);
          c->yield_cycles(1);
        }
      });
    s.run();
    const std::vector<std::pair<int, uint64_t>> want = {{0, 0}, {1, 0}, {0, 1}, {1, 1}, {0, 2}, {1, 2}, {0, 3}, {1, 3}};
    CHECK(log.runs == want);
    CHECK(a.local_clock == 4);
    CHECK(b.local_clock == 4);
  }

  TEST_CASE("the smallest clock always runs next") {
    EventQueue ev;
    Scheduler s(ev);
    std::vector<ExecutionContext> ctx(3);
    std::vector<uint64_t> seen;
    for (unsigned i = 0; i < 3; ++i) {
      ctx[i].core_index = i;
      s.add(ctx[i], [&, i] {
        std::mt19937_64 rng(i);
        for (int k = 0; k < 200; ++k) {
          uint64_t min_other = UINT64_MAX;
          for (unsigned j = 0; j < 3; ++j)
            if (j != i && ctx[j].local_clock < 1000000) min_other = std::min(min_other, ctx[j].local_clock);
          // No runnable context is strictly behind the running one.
          if (min_other < ctx[i].local_clock) seen.push_back(min_other);
          ctx[i].yield_cycles(1 + rng() % 9);
        }
        ctx[i].local_clock = 1000000;  // finished contexts do not count
      });
    }
    s.run();
    CHECK(seen.empty());
  }

  TEST_CASE("a 7-instruction block under Simple is one yield of 7") {
    EventQueue ev;
    Scheduler s(ev);
    ExecutionContext c;
    s.add(c, [&] {
      for (int i = 0; i < 7; ++i) c.accumulate(1);
      c.flush();
    });
    s.run();
    CHECK(c.local_clock == 7);
    CHECK(s.stats.yields == 1);
  }

  TEST_CASE("events fire in due then insertion order, past dues are clamped") {
    EventQueue ev;
    std::vector<int> order;
    ev.schedule(10, [&](uint64_t) { order.push_back(1); }, 0);
    ev.schedule(5, [&](uint64_t) { order.push_back(2); }, 0);
    ev.schedule(10, [&](uint64_t) { order.push_back(3); }, 0);
    const uint64_t t = ev.schedule(7, [&](uint64_t) { order.push_back(4); }, 0);
    uint64_t fired_at = 0;
    ev.schedule(2, [&](uint64_t now) { fired_at = now; order.push_back(5); }, 6);
    CHECK(ev.clamped() == 1);
    CHECK(ev.cancel(t));
    CHECK_FALSE(ev.cancel(t));
    CHECK(ev.next_due() == 5);
    CHECK(ev.run_due(20) == 4);
    CHECK(order == std::vector<int>{2, 5, 1, 3});
    CHECK(fired_at == 6);
    CHECK(ev.next_due() == UINT64_MAX);
  }

  TEST_CASE("events due before a context's clock fire before it resumes") {
    EventQueue ev;
    Scheduler s(ev);
    ExecutionContext c;
    uint64_t clock_at_event = 0;
    s.add(c, [&] {
      ev.schedule(5, [&](uint64_t) { clock_at_event = c.local_clock; }, 0);
      c.yield_cycles(10);
      c.yield_cycles(1);
    });
    s.run();
    CHECK(clock_at_event == 10);
    CHECK(s.stats.events_fired == 1);
  }

  TEST_CASE("block and wake") {
    EventQueue ev;
    Scheduler s(ev);
    ExecutionContext a, b;
    a.core_index = 0;
    b.core_index = 1;
    bool flag = false;
    s.add(a, [&] {
      s.block(a);
      CHECK(flag);
      CHECK(a.local_clock >= 50);
    });
    s.add(b, [&] {
      b.yield_cycles(50);
      flag = true;
      s.wake(a, b.local_clock);
    });
    s.run();
  }

  TEST_CASE("deadlock is reported") {
    EventQueue ev;
    Scheduler s(ev);
    ExecutionContext a;
    s.add(a, [&] { s.block(a); });
    CHECK_THROWS_AS(s.run(), DeadlockError);
  }

  TEST_CASE("stall hook can resolve a deadlock") {
    EventQueue ev;
    Scheduler s(ev);
    ExecutionContext a;
    s.add(a, [&] { s.block(a); });
    int calls = 0;
    s.on_stall = [&] {
      ++calls;
      s.wake(a, 0);
      return true;
    };
    s.run();
    CHECK(calls == 1);
  }

  TEST_CASE("body exceptions propagate out of run") {
    EventQueue ev;
    Scheduler s(ev);
    ExecutionContext a;
    s.add(a, [&] {
      a.yield_cycles(3);
      throw std::runtime_error("boom");
    });
    CHECK_THROWS_WITH(s.run(), "boom");
  }

  TEST_CASE("traces are identical across runs") {
    auto once = [] {
      EventQueue ev;
      Scheduler s(ev);
      std::vector<TraceEntry> trace;
      s.set_trace(&trace);
      std::vector<ExecutionContext> ctx(4);
      for (unsigned i = 0; i < 4; ++i) {
        ctx[i].core_index = i;
        s.add(ctx[i], [&, i] {
          std::mt19937_64 rng(i * 31 + 1);
          for (int k = 0; k < 500; ++k) {
            if (k % 50 == 0) ev.schedule(ctx[i].local_clock + 3, [](uint64_t) {}, ctx[i].local_clock);
            ctx[i].yield_cycles(1 + rng() % 5);
          }
        });
      }
      s.run();
      return std::make_pair(trace, s.stats.trace_hash);
    };
    const auto a = once();
    const auto b = once();
    CHECK(a.first.size() > 100);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
  }

  TEST_CASE("parallel bodies run and rethrow") {
    std::atomic<int> n{0};
    run_parallel({[&] { ++n; }, [&] { ++n; }, [&] { ++n; }});
    CHECK(n == 3);
    CHECK_THROWS(run_parallel({[] {}, [] { throw std::runtime_error("x"); }}));
  }

  TEST_CASE("switch and barrier rate probes return positive rates") {
    CHECK(measure_fiber_switch_rate(2, 1000) > 0);
    CHECK(measure_barrier_sync_rate(2, 100) > 0);
  }
}
