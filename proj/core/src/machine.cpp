#include "rvdbt/machine.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <thread>

#include "rvdbt/csr.hpp"
#include "rvdbt/stats.hpp"
#include "rvdbt/xlat.hpp"

namespace rvdbt {

std::string_view stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::None: return "none";
    case StopReason::Exit: return "exit";
    case StopReason::InsnLimit: return "insn-limit";
    case StopReason::CycleLimit: return "cycle-limit";
    case StopReason::AllStopped: return "all-stopped";
    case StopReason::Error: return "error";
  }
  return "?";
}

namespace {

uint64_t page_up(uint64_t v) { return (v + 4095) & ~uint64_t(4095); }

const char* priv_name(Privilege p) {
  return p == Privilege::Machine ? "M" : p == Privilege::Supervisor ? "S" : "U";
}

}  // namespace

Machine::Machine(const SimConfig& config) : config_(config) {
  if (auto err = validate(config_)) throw ConfigError(*err);
  memory_ = std::make_unique<GuestMemory>(config_.effective_memory_base(), config_.memory_size);
  memsys_ = std::make_unique<mem::MemorySystem>(*memory_, config_.cores, config_.mem_params);
  if (!memsys_->valid_combination(config_.memory, config_.line_size))
    throw ConfigError("line size " + std::to_string(config_.line_size) + " is not supported by the " +
                      std::string(mem::memory_model_name(config_.memory)) + " memory model");
  memsys_->configure(config_.memory, config_.line_size, true);
  runtime_ = {config_.memory, config_.line_size, config_.mode};
  for (unsigned i = 0; i < config_.cores; ++i) {
    const auto id = pipeline::registry().id_of(config_.pipeline_for(i));
    if (!id) throw ConfigError("unknown pipeline model '" + config_.pipeline_for(i) + "'");
    auto h = std::make_unique<Hart>(*this, i);
    h->set_model(*id, config_.pipeline_params);
    h->reset(0);
    harts_.push_back(std::move(h));
  }
  timer_tokens_.assign(config_.cores, 0);
}

Machine::~Machine() = default;

void Machine::load(const ElfImage& image, const std::vector<std::string>& argv) {
  const bool user = config_.target == sys::EmulationTarget::User;
  for (const auto& seg : image.segments) {
    const uint64_t at = user ? seg.vaddr : seg.paddr;
    if (!memory_->contains(at, seg.memsz)) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "segment at 0x%" PRIx64 " (+0x%" PRIx64 ") lies outside guest memory", at, seg.memsz);
      throw ElfError(buf);
    }
    std::memset(memory_->host(at), 0, seg.memsz);
    memory_->write_bytes(at, seg.data);
  }
  image_ = image;

  for (auto& hp : harts_) {
    Hart& h = *hp;
    h.reset(image.entry);
    h.x[10] = h.id();
    switch (config_.target) {
      case sys::EmulationTarget::Machine:
        break;
      case sys::EmulationTarget::Supervisor:
        // Firmware hands over in S mode with the usual delegation; only
        // the boot hart runs, the others wait for an HSM start.
        h.priv = Privilege::Supervisor;
        h.csr.medeleg = 0xb1ff;
        h.csr.mideleg = mip::kSupervisorBits;
        h.update_regimes();
        if (h.id() != 0) h.wait.store(WaitState::Stopped);
        break;
      case sys::EmulationTarget::User:
        h.priv = Privilege::User;
        h.x[10] = 0;
        h.update_regimes();
        if (h.id() != 0) h.wait.store(WaitState::Stopped);
        break;
    }
  }

  if (user) {
    UserProcess& p = process_;
    p = {};
    p.stack_top = memory_->end() - 16;
    p.mmap_top = (memory_->end() - config_.user_stack_size) & ~uint64_t(4095);
    p.brk_base = p.brk = page_up(image.end_vaddr());
    p.mmap_floor = p.brk_base;
    p.running_threads = 1;
    if (p.brk_base >= p.mmap_top) throw ElfError("image leaves no room for heap and stack");
    setup_user_stack(*harts_[0], argv);
  }
}

void Machine::load_file(const std::string& path, const std::vector<std::string>& argv) {
  load(read_elf_file(path), argv.empty() ? std::vector<std::string>{path} : argv);
}

void Machine::setup_user_stack(Hart& h, const std::vector<std::string>& argv) {
  uint64_t sp = process_.stack_top;
  std::vector<uint64_t> ptrs;
  for (const auto& a : argv) {
    sp -= a.size() + 1;
    std::memcpy(memory_->host(sp), a.c_str(), a.size() + 1);
    ptrs.push_back(sp);
  }
  sp -= 16;
  const uint64_t random = sp;
  for (unsigned i = 0; i < 16; ++i) memory_->write<uint8_t>(random + i, static_cast<uint8_t>(0x5a ^ (i * 37)));
  sp &= ~uint64_t(15);
  std::vector<uint64_t> words;
  words.push_back(argv.size());
  for (uint64_t p : ptrs) words.push_back(p);
  words.push_back(0);
  words.push_back(0);  // envp
  const uint64_t auxv[] = {6, 4096, 25, random, 0, 0};
  for (uint64_t w : auxv) words.push_back(w);
  sp -= words.size() * 8;
  sp &= ~uint64_t(15);
  for (size_t i = 0; i < words.size(); ++i) memory_->write<uint64_t>(sp + 8 * i, words[i]);
  h.x[2] = sp;
}

int Machine::run() {
  const auto t0 = std::chrono::steady_clock::now();
  for (;;) {
    if (runtime_.mode == ExecMode::Lockstep)
      run_lockstep();
    else
      run_parallel();
    if (stop_requested()) break;
    if (rendezvous_requested()) {
      commit_rendezvous();
      continue;
    }
    break;
  }
  wall_seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return exit_code_;
}

void Machine::run_lockstep() {
  sched::Scheduler s(events_);
  for (auto& h : harts_) {
    Hart* hp = h.get();
    s.add(hp->ctx, [this, hp] { hart_main(*hp); });
  }
  s.on_stall = [this] { return on_stall(); };
  scheduler_ = &s;
  try {
    s.run();
  } catch (const sched::DeadlockError& e) {
    ++deadlocks_;
    std::string states;
    for (const auto& h : harts_) {
      const WaitState w = h->wait.load();
      states += " core" + std::to_string(h->id()) + "=" +
                (w == WaitState::Wfi ? "wfi" : w == WaitState::Futex ? "futex" : w == WaitState::Stopped ? "stopped" : "run");
    }
    spdlog::error("deadlock: no hart can make progress;{}", states);
    stop(1, StopReason::Error, "deadlock:" + states);
  }
  scheduler_ = nullptr;
  context_switches_ += s.stats.context_switches;
  trace_hash_ = trace_hash_ * 0x100000001b3ull ^ s.stats.trace_hash;
  for (auto& h : harts_) {
    h->ctx.scheduler = nullptr;
    h->ctx.slot = -1;
  }
}

void Machine::run_parallel() {
  std::vector<std::function<void()>> bodies;
  for (auto& h : harts_) {
    Hart* hp = h.get();
    hp->ctx.scheduler = nullptr;
    bodies.emplace_back([this, hp] { hart_main(*hp); });
  }
  sched::run_parallel(bodies);
}

void Machine::hart_main(Hart& h) {
  for (;;) {
    if (should_return()) return;
    if (h.wait.load() != WaitState::None) {
      if (!wait_step(h)) return;
      continue;
    }
    xlat::run_blocks(h);
  }
}

bool Machine::wait_step(Hart& h) {
  const WaitState w = h.wait.load();
  if (w == WaitState::Wfi && (h.mip.load() & h.csr.mie)) {
    h.wait.store(WaitState::None);
    // Take the interrupt before anything past the WFI executes.
    if (const auto irq = sys::check_interrupt(h)) {
      ++h.stats.interrupts;
      sys::take_trap(h, *irq, h.pc);
    }
    h.entered_taken = true;
    return true;
  }
  if (scheduler_) {
    scheduler_->block(h.ctx);
    return true;
  }
  h.ctx.local_clock += 1;
  events_.run_due(h.ctx.local_clock);
  if ((h.ctx.local_clock & 1023) == 0) {
    bool all_stopped = true;
    bool any_running = false;
    for (const auto& o : harts_) {
      const WaitState ow = o->wait.load();
      all_stopped &= ow == WaitState::Stopped;
      any_running |= ow == WaitState::None || ow == WaitState::Wfi;
    }
    if (all_stopped) {
      stop(process_.last_exit_code, StopReason::AllStopped, "all harts stopped");
    } else if (!any_running && events_.next_due() == UINT64_MAX) {
      ++deadlocks_;
      stop(1, StopReason::Error, "deadlock: every hart waits on a futex");
    }
    std::this_thread::yield();
  }
  return true;
}

bool Machine::on_stall() {
  if (!should_return()) {
    bool all_stopped = true;
    for (const auto& h : harts_) all_stopped &= h->wait.load() == WaitState::Stopped;
    if (!all_stopped) return false;
    stop(process_.last_exit_code, StopReason::AllStopped, "all harts stopped");
  }
  // Waking to leave does not advance the clock of a waiting hart.
  for (auto& h : harts_)
    if (scheduler_->is_blocked(h->ctx)) scheduler_->wake(h->ctx, 0);
  return true;
}

void Machine::commit_rendezvous() {
  RuntimeConfig next;
  {
    std::lock_guard lock(control_mutex_);
    next = pending_runtime_;
    rendezvous_flag_ = false;
  }
  uint64_t clock = 0;
  for (auto& h : harts_) {
    h->ctx.flush();
    clock = std::max(clock, h->ctx.local_clock);
  }
  for (auto& h : harts_) h->ctx.local_clock = clock;
  memsys_->configure(next.memory, next.line_size, config_.reset_stats_on_switch);
  for (auto& h : harts_) {
    h->code.flush();
    h->entered_taken = true;
  }
  runtime_ = next;
  ++rendezvous_count_;
  roi_baseline_ = collect_counters(*this);
  spdlog::debug("rendezvous {}: memory={} line={} mode={} at cycle {}", rendezvous_count_,
                mem::memory_model_name(next.memory), next.line_size, exec_mode_name(next.mode), clock);
  if (on_rendezvous) on_rendezvous(*this);
}

void Machine::stop(int exit_code, StopReason reason, const std::string& message) {
  {
    std::lock_guard lock(control_mutex_);
    if (stop_flag_.load()) return;
    exit_code_ = exit_code;
    stop_reason_ = reason;
    stop_message_ = message;
    stop_flag_.store(true);
  }
  if (scheduler_)
    for (auto& h : harts_)
      if (h->ctx.slot >= 0 && scheduler_->is_blocked(h->ctx)) scheduler_->wake(h->ctx, 0);
}

void Machine::request_rendezvous(const RuntimeConfig& target) {
  {
    std::lock_guard lock(control_mutex_);
    pending_runtime_ = target;
    rendezvous_flag_.store(true);
  }
  if (scheduler_)
    for (auto& h : harts_)
      if (h->ctx.slot >= 0 && scheduler_->is_blocked(h->ctx)) scheduler_->wake(h->ctx, 0);
}

void Machine::fail(const Hart& h, const std::string& what) {
  std::string msg = "core " + std::to_string(h.id()) + ": " + what;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "\n  pc=0x%" PRIx64 " priv=%s minstret=%" PRIu64 " cycle=%" PRIu64 "\n  mcause=0x%" PRIx64
                " mepc=0x%" PRIx64 " mtval=0x%" PRIx64 " scause=0x%" PRIx64 " sepc=0x%" PRIx64 " stval=0x%" PRIx64,
                h.pc, priv_name(h.priv), h.minstret, h.ctx.local_clock, h.csr.mcause, h.csr.mepc, h.csr.mtval,
                h.csr.scause, h.csr.sepc, h.csr.stval);
  msg += buf;
  msg += "\n  recent trap causes:";
  const size_t n = std::min<size_t>(h.recent_cause_pos, h.recent_causes.size());
  for (size_t i = 0; i < n; ++i) {
    const uint64_t c = h.recent_causes[(h.recent_cause_pos - n + i) % h.recent_causes.size()];
    std::snprintf(buf, sizeof buf, " %s%" PRIu64, (c & kInterruptBit) ? "irq" : "", c & ~kInterruptBit);
    msg += buf;
  }
  for (unsigned r = 0; r < 32; r += 4) {
    std::snprintf(buf, sizeof buf, "\n  x%-2u %016" PRIx64 " %016" PRIx64 " %016" PRIx64 " %016" PRIx64, r, h.x[r],
                  h.x[r + 1], h.x[r + 2], h.x[r + 3]);
    msg += buf;
  }
  spdlog::error("{}", msg);
  stop(1, StopReason::Error, msg);
}

void Machine::raise_pending(Hart& target, uint64_t bits) {
  target.mip.fetch_or(bits);
  notify(target);
}

void Machine::clear_pending(Hart& target, uint64_t bits) { target.mip.fetch_and(~bits); }

void Machine::notify(Hart& target) {
  if (scheduler_ && target.ctx.slot >= 0 && scheduler_->is_blocked(target.ctx))
    scheduler_->wake(target.ctx, scheduler_->now());
}

uint64_t Machine::time(const Hart& h) const { return h.ctx.local_clock + h.ctx.pending_cycles; }

void Machine::set_timer(Hart& h, uint64_t when) {
  uint64_t& token = timer_tokens_[h.id()];
  if (token) events_.cancel(token);
  token = 0;
  const uint64_t bit = config_.target == sys::EmulationTarget::Machine ? mip::kMtip : mip::kStip;
  clear_pending(h, bit);
  if (when == UINT64_MAX) return;
  Hart* hp = &h;
  token = events_.schedule(when, [this, hp, bit](uint64_t) { raise_pending(*hp, bit); }, time(h));
}

void Machine::console_put(char c) {
  std::lock_guard lock(console_mutex_);
  console_ += c;
  if (config_.echo_console) {
    std::fputc(c, stdout);
    if (c == '\n') std::fflush(stdout);
  }
}

}  // namespace rvdbt
