#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace rvdbt::sched {

class Scheduler;

/// One simulated hardware thread as seen by the scheduler.
struct ExecutionContext {
  unsigned core_index = 0;
  uint64_t local_clock = 0;
  uint64_t pending_cycles = 0;
  Scheduler* scheduler = nullptr;  // null when running free (parallel mode)
  int slot = -1;                   // scheduler bookkeeping

  void accumulate(uint64_t n) { pending_cycles += n; }
  /// Synchronisation point: yields the batched cycles, if any.
  inline void flush();
  inline void yield_cycles(uint64_t n);
};

using EventFn = std::function<void(uint64_t now)>;

/// Cycle-keyed event queue. Events fire in (due, insertion) order. Safe for
/// concurrent use; callbacks run without the internal lock held.
class EventQueue {
 public:
  /// Schedules `fn` at `due`. A due cycle in the past is clamped to `now`.
  uint64_t schedule(uint64_t due, EventFn fn, uint64_t now);
  bool cancel(uint64_t token);

  /// Earliest due cycle, or UINT64_MAX when empty. Lock-free.
  uint64_t next_due() const { return next_due_.load(std::memory_order_acquire); }
  /// Fires the events due at exactly the earliest due cycle, if that is
  /// <= `limit`. Returns the number fired.
  size_t run_earliest(uint64_t limit);
  /// Fires every event due <= `limit`.
  size_t run_due(uint64_t limit);

  size_t size() const;
  uint64_t clamped() const { return clamped_; }
  uint64_t fired() const { return fired_; }

 private:
  struct Entry {
    uint64_t token;
    EventFn fn;
  };
  bool pop_if_due(uint64_t limit, uint64_t& due, EventFn& fn);
  void refresh_next_locked();

  mutable std::mutex mutex_;
  std::map<std::pair<uint64_t, uint64_t>, Entry> queue_;
  std::unordered_map<uint64_t, std::pair<uint64_t, uint64_t>> by_token_;
  uint64_t seq_ = 0;
  uint64_t next_token_ = 1;
  std::atomic<uint64_t> next_due_{UINT64_MAX};
  uint64_t clamped_ = 0;
  uint64_t fired_ = 0;
};

enum class TraceAction : uint8_t { Yield = 0, Event = 1, Block = 2, Wake = 3, Finish = 4 };

struct TraceEntry {
  uint64_t cycle;
  int core;  // -1 for the event loop
  TraceAction action;
  bool operator==(const TraceEntry&) const = default;
};

struct SchedulerStats {
  uint64_t context_switches = 0;  // resumptions of a different context
  uint64_t resumes = 0;
  uint64_t yields = 0;
  uint64_t fast_yields = 0;  // yields that kept running without a switch
  uint64_t events_fired = 0;
  uint64_t trace_hash = 0xcbf29ce484222325ull;
};

class DeadlockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic lockstep scheduler. The runnable context with the smallest
/// (local_clock, core_index) runs next; events due at or before that clock
/// fire first. Contexts run on their own stacks (fibers) inside the calling
/// thread.
class Scheduler {
 public:
  explicit Scheduler(EventQueue& events, size_t stack_size = 1 << 20);
  ~Scheduler();
  Scheduler(const Scheduler&) = delete;
  Scheduler& operator=(const Scheduler&) = delete;

  void add(ExecutionContext& ctx, std::function<void()> body);

  /// Runs until every body has returned. Exceptions thrown by a body are
  /// rethrown here. If nothing is runnable and no event is pending,
  /// `on_stall` is consulted; it must wake something (or let bodies finish)
  /// and return true, otherwise DeadlockError is thrown.
  void run();

  /// Called from inside a context: advance its clock by n and let every
  /// context that is now behind catch up.
  void yield_cycles(ExecutionContext& ctx, uint64_t n);
  /// Suspends the context until wake().
  void block(ExecutionContext& ctx);
  /// Makes a blocked context runnable again no earlier than `at`.
  void wake(ExecutionContext& ctx, uint64_t at);
  bool is_blocked(const ExecutionContext& ctx) const;

  /// Global time: the clock of the running context (or of the last event).
  uint64_t now() const { return now_; }
  ExecutionContext* current() const;

  void set_trace(std::vector<TraceEntry>* sink) { trace_ = sink; }

  std::function<bool()> on_stall;
  SchedulerStats stats;

 private:
  struct Slot;
  Slot* pick() const;
  bool must_switch(const ExecutionContext& ctx) const;
  void record(uint64_t cycle, int core, TraceAction action);
  void resume(Slot& s);
  void suspend(Slot& s);

  EventQueue& events_;
  size_t stack_size_;
  std::vector<std::unique_ptr<Slot>> slots_;
  Slot* current_ = nullptr;
  Slot* last_ = nullptr;
  uint64_t now_ = 0;
  std::vector<TraceEntry>* trace_ = nullptr;
};

inline void ExecutionContext::yield_cycles(uint64_t n) {
  if (scheduler)
    scheduler->yield_cycles(*this, n);
  else
    local_clock += n;
}

inline void ExecutionContext::flush() {
  if (pending_cycles) {
    const uint64_t n = pending_cycles;
    pending_cycles = 0;
    yield_cycles(n);
  }
}

/// Runs each body on its own OS thread and joins them; the first exception
/// is rethrown.
void run_parallel(const std::vector<std::function<void()>>& bodies);

/// Measures the lockstep scheduler: `contexts` fibers each yielding one
/// cycle `cycles` times. Returns context switches per second.
double measure_fiber_switch_rate(unsigned contexts, uint64_t cycles);

/// Naive lockstep with OS threads: every thread waits on a std::barrier
/// once per cycle. Returns barrier synchronisations per second.
double measure_barrier_sync_rate(unsigned threads, uint64_t cycles);

}  // namespace rvdbt::sched
