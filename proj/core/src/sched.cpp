#include "rvdbt/sched.hpp"

#include <barrier>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include <boost/context/fiber.hpp>
#include <boost/context/protected_fixedsize_stack.hpp>

namespace rvdbt::sched {

namespace bctx = boost::context;

uint64_t EventQueue::schedule(uint64_t due, EventFn fn, uint64_t now) {
  std::lock_guard lock(mutex_);
  if (due < now) {
    due = now;
    ++clamped_;
  }
  const uint64_t token = next_token_++;
  const auto key = std::make_pair(due, seq_++);
  queue_.emplace(key, Entry{token, std::move(fn)});
  by_token_.emplace(token, key);
  refresh_next_locked();
  return token;
}

bool EventQueue::cancel(uint64_t token) {
  std::lock_guard lock(mutex_);
  auto it = by_token_.find(token);
  if (it == by_token_.end()) return false;
  queue_.erase(it->second);
  by_token_.erase(it);
  refresh_next_locked();
  return true;
}

void EventQueue::refresh_next_locked() {
  next_due_.store(queue_.empty() ? UINT64_MAX : queue_.begin()->first.first, std::memory_order_release);
}

bool EventQueue::pop_if_due(uint64_t limit, uint64_t& due, EventFn& fn) {
  std::lock_guard lock(mutex_);
  if (queue_.empty()) return false;
  auto it = queue_.begin();
  if (it->first.first > limit) return false;
  due = it->first.first;
  fn = std::move(it->second.fn);
  by_token_.erase(it->second.token);
  queue_.erase(it);
  ++fired_;
  refresh_next_locked();
  return true;
}

size_t EventQueue::run_earliest(uint64_t limit) {
  const uint64_t first = next_due();
  if (first > limit) return 0;
  size_t n = 0;
  uint64_t due;
  EventFn fn;
  // Events scheduled by a callback for the same cycle fire in this batch too.
  while (pop_if_due(first, due, fn)) {
    fn(due);
    ++n;
  }
  return n;
}

size_t EventQueue::run_due(uint64_t limit) {
  size_t n = 0;
  uint64_t due;
  EventFn fn;
  while (pop_if_due(limit, due, fn)) {
    fn(due);
    ++n;
  }
  return n;
}

size_t EventQueue::size() const {
  std::lock_guard lock(mutex_);
  return queue_.size();
}

struct Scheduler::Slot {
  ExecutionContext* ctx = nullptr;
  std::function<void()> body;
  bctx::fiber fiber;
  bctx::fiber caller;
  bool started = false;
  bool done = false;
  bool blocked = false;
  std::exception_ptr error;
};

Scheduler::Scheduler(EventQueue& events, size_t stack_size) : events_(events), stack_size_(stack_size) {}

Scheduler::~Scheduler() = default;

void Scheduler::add(ExecutionContext& ctx, std::function<void()> body) {
  auto slot = std::make_unique<Slot>();
  slot->ctx = &ctx;
  slot->body = std::move(body);
  ctx.scheduler = this;
  ctx.slot = static_cast<int>(slots_.size());
  slots_.push_back(std::move(slot));
}

ExecutionContext* Scheduler::current() const { return current_ ? current_->ctx : nullptr; }

bool Scheduler::is_blocked(const ExecutionContext& ctx) const { return slots_[ctx.slot]->blocked; }

Scheduler::Slot* Scheduler::pick() const {
  Slot* best = nullptr;
  for (const auto& s : slots_) {
    if (s->done || s->blocked) continue;
    if (!best || s->ctx->local_clock < best->ctx->local_clock ||
        (s->ctx->local_clock == best->ctx->local_clock && s->ctx->core_index < best->ctx->core_index))
      best = s.get();
  }
  return best;
}

bool Scheduler::must_switch(const ExecutionContext& ctx) const {
  if (events_.next_due() <= ctx.local_clock) return true;
  for (const auto& s : slots_) {
    if (s->ctx == &ctx || s->done || s->blocked) continue;
    const uint64_t c = s->ctx->local_clock;
    if (c < ctx.local_clock || (c == ctx.local_clock && s->ctx->core_index < ctx.core_index)) return true;
  }
  return false;
}

void Scheduler::record(uint64_t cycle, int core, TraceAction action) {
  uint64_t h = stats.trace_hash;
  auto mix = [&h](uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (i * 8)) & 0xff;
      h *= 0x100000001b3ull;
    }
  };
  mix(cycle);
  mix(static_cast<uint64_t>(static_cast<int64_t>(core)));
  mix(static_cast<uint64_t>(action));
  stats.trace_hash = h;
  if (trace_) trace_->push_back({cycle, core, action});
}

void Scheduler::resume(Slot& s) {
  current_ = &s;
  if (!s.started) {
    s.started = true;
    Slot* sp = &s;
    s.fiber = bctx::fiber(std::allocator_arg, bctx::protected_fixedsize_stack(stack_size_),
                          [this, sp](bctx::fiber&& caller) {
                            sp->caller = std::move(caller);
                            try {
                              sp->body();
                            } catch (const bctx::detail::forced_unwind&) {
                              throw;
                            } catch (...) {
                              sp->error = std::current_exception();
                            }
                            sp->done = true;
                            record(sp->ctx->local_clock, static_cast<int>(sp->ctx->core_index), TraceAction::Finish);
                            return std::move(sp->caller);
                          });
  }
  s.fiber = std::move(s.fiber).resume();
  current_ = nullptr;
}

void Scheduler::suspend(Slot& s) { s.caller = std::move(s.caller).resume(); }

void Scheduler::run() {
  for (;;) {
    Slot* s = pick();
    const uint64_t due = events_.next_due();
    if (!s) {
      bool all_done = true;
      for (const auto& slot : slots_) all_done = all_done && slot->done;
      if (all_done) return;
      if (due != UINT64_MAX) {
        if (due > now_) now_ = due;
        stats.events_fired += events_.run_earliest(due);
        record(due, -1, TraceAction::Event);
        continue;
      }
      if (on_stall && on_stall()) continue;
      throw DeadlockError("no runnable context and no pending event");
    }
    if (due <= s->ctx->local_clock) {
      if (due > now_) now_ = due;
      stats.events_fired += events_.run_earliest(due);
      record(due, -1, TraceAction::Event);
      continue;
    }
    now_ = s->ctx->local_clock;
    ++stats.resumes;
    if (s != last_) ++stats.context_switches;
    last_ = s;
    resume(*s);
    if (s->error) {
      auto e = s->error;
      s->error = nullptr;
      std::rethrow_exception(e);
    }
  }
}

void Scheduler::yield_cycles(ExecutionContext& ctx, uint64_t n) {
  if (!current_ || current_->ctx != &ctx) {
    std::fprintf(stderr, "rvdbt: yield_cycles called outside context %u\n", ctx.core_index);
    std::abort();
  }
  ctx.local_clock += n;
  ++stats.yields;
  record(ctx.local_clock, static_cast<int>(ctx.core_index), TraceAction::Yield);
  if (!must_switch(ctx)) {
    ++stats.fast_yields;
    now_ = ctx.local_clock;
    return;
  }
  suspend(*current_);
}

void Scheduler::block(ExecutionContext& ctx) {
  Slot& s = *slots_[ctx.slot];
  if (current_ != &s) {
    std::fprintf(stderr, "rvdbt: block called outside context %u\n", ctx.core_index);
    std::abort();
  }
  s.blocked = true;
  record(ctx.local_clock, static_cast<int>(ctx.core_index), TraceAction::Block);
  suspend(s);
}

void Scheduler::wake(ExecutionContext& ctx, uint64_t at) {
  Slot& s = *slots_[ctx.slot];
  if (!s.blocked) return;
  s.blocked = false;
  if (at > ctx.local_clock) ctx.local_clock = at;
  record(ctx.local_clock, static_cast<int>(ctx.core_index), TraceAction::Wake);
}

void run_parallel(const std::vector<std::function<void()>>& bodies) {
  std::vector<std::exception_ptr> errors(bodies.size());
  {
    std::vector<std::jthread> threads;
    threads.reserve(bodies.size());
    for (size_t i = 0; i < bodies.size(); ++i) {
      threads.emplace_back([&, i] {
        try {
          bodies[i]();
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double measure_fiber_switch_rate(unsigned contexts, uint64_t cycles) {
  EventQueue events;
  Scheduler sched(events, 64 * 1024);
  std::vector<ExecutionContext> ctxs(contexts);
  for (unsigned i = 0; i < contexts; ++i) {
    ctxs[i].core_index = i;
    sched.add(ctxs[i], [&ctx = ctxs[i], cycles] {
      for (uint64_t c = 0; c < cycles; ++c) ctx.yield_cycles(1);
    });
  }
  const auto t0 = std::chrono::steady_clock::now();
  sched.run();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return static_cast<double>(sched.stats.context_switches) / std::max(secs, 1e-9);
}

double measure_barrier_sync_rate(unsigned threads, uint64_t cycles) {
  std::barrier sync(static_cast<std::ptrdiff_t>(threads));
  const auto t0 = std::chrono::steady_clock::now();
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i)
      pool.emplace_back([&] {
        for (uint64_t c = 0; c < cycles; ++c) sync.arrive_and_wait();
      });
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return static_cast<double>(cycles) / std::max(secs, 1e-9);
}

}  // namespace rvdbt::sched
