#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "rvdbt/config.hpp"
#include "rvdbt/elf.hpp"
#include "rvdbt/guest_memory.hpp"
#include "rvdbt/hart.hpp"
#include "rvdbt/mem/memory_system.hpp"
#include "rvdbt/sched.hpp"

namespace rvdbt {

enum class StopReason : uint8_t { None, Exit, InsnLimit, CycleLimit, AllStopped, Error };

std::string_view stop_reason_name(StopReason r);

/// Global part of the runtime configuration. Changing any of it needs every
/// hart to be quiescent.
struct RuntimeConfig {
  mem::MemoryModel memory = mem::MemoryModel::Atomic;
  unsigned line_size = 64;
  ExecMode mode = ExecMode::Lockstep;
  bool operator==(const RuntimeConfig&) const = default;
};

/// State of the emulated Linux process for the user target.
struct UserProcess {
  uint64_t brk_base = 0;
  uint64_t brk = 0;
  uint64_t mmap_top = 0;
  uint64_t mmap_floor = 0;
  uint64_t stack_top = 0;
  int running_threads = 1;
  int last_exit_code = 0;
  std::set<uint64_t> unknown_syscalls;  // each logged once
};

class Machine {
 public:
  explicit Machine(const SimConfig& config);
  ~Machine();
  Machine(const Machine&) = delete;
  Machine& operator=(const Machine&) = delete;

  const SimConfig& config() const { return config_; }
  GuestMemory& memory() { return *memory_; }
  const GuestMemory& memory() const { return *memory_; }
  mem::MemorySystem& memsys() { return *memsys_; }
  const mem::MemorySystem& memsys() const { return *memsys_; }
  sched::EventQueue& events() { return events_; }
  unsigned cores() const { return static_cast<unsigned>(harts_.size()); }
  Hart& hart(unsigned i) { return *harts_[i]; }
  const Hart& hart(unsigned i) const { return *harts_[i]; }
  sys::EmulationTarget target() const { return config_.target; }

  /// Copies the image into guest memory and sets every hart up for the
  /// target. `argv` is only used by the user target.
  void load(const ElfImage& image, const std::vector<std::string>& argv = {});
  void load_file(const std::string& path, const std::vector<std::string>& argv = {});
  const ElfImage& image() const { return image_; }

  /// Runs until the guest exits, a limit is hit or an error stops the run.
  /// Returns the exit code.
  int run();

  RuntimeConfig runtime() const { return runtime_; }
  sched::Scheduler* scheduler() const { return scheduler_; }

  // Services used by the harts.
  void stop(int exit_code, StopReason reason, const std::string& message = {});
  bool stop_requested() const { return stop_flag_.load(std::memory_order_relaxed); }
  bool rendezvous_requested() const { return rendezvous_flag_.load(std::memory_order_relaxed); }
  bool should_return() const { return stop_requested() || rendezvous_requested(); }
  void request_rendezvous(const RuntimeConfig& target);
  /// Fatal guest condition: stops the run with a diagnostic dump.
  void fail(const Hart& h, const std::string& what);

  /// Sets interrupt-pending bits on `target` and wakes it if it waits.
  void raise_pending(Hart& target, uint64_t bits);
  void clear_pending(Hart& target, uint64_t bits);
  /// Makes a waiting hart re-evaluate its wait condition.
  void notify(Hart& target);

  /// mtime as seen by `h`.
  uint64_t time(const Hart& h) const;
  /// Schedules the timer interrupt of `h` at mtime `when`.
  void set_timer(Hart& h, uint64_t when);

  void console_put(char c);
  const std::string& console() const { return console_; }

  int exit_code() const { return exit_code_; }
  StopReason stop_reason() const { return stop_reason_; }
  const std::string& stop_message() const { return stop_message_; }

  UserProcess& process() { return process_; }
  std::mutex& futex_mutex() { return futex_mutex_; }

  /// Called after every committed rendezvous with all harts quiescent.
  std::function<void(Machine&)> on_rendezvous;
  uint64_t rendezvous_count() const { return rendezvous_count_; }
  const std::map<std::string, uint64_t>& roi_baseline() const { return roi_baseline_; }
  bool roi_active() const { return rendezvous_count_ > 0; }

  /// Host wall-clock seconds spent in run().
  double wall_seconds() const { return wall_seconds_; }
  uint64_t context_switches() const { return context_switches_; }
  uint64_t trace_hash() const { return trace_hash_; }
  uint64_t deadlocks() const { return deadlocks_; }

 private:
  void run_lockstep();
  void run_parallel();
  void hart_main(Hart& h);
  bool wait_step(Hart& h);
  bool on_stall();
  void commit_rendezvous();
  void setup_user_stack(Hart& h, const std::vector<std::string>& argv);

  SimConfig config_;
  std::unique_ptr<GuestMemory> memory_;
  std::unique_ptr<mem::MemorySystem> memsys_;
  sched::EventQueue events_;
  std::vector<std::unique_ptr<Hart>> harts_;
  std::vector<uint64_t> timer_tokens_;
  ElfImage image_;
  RuntimeConfig runtime_;
  RuntimeConfig pending_runtime_;
  sched::Scheduler* scheduler_ = nullptr;

  std::atomic<bool> stop_flag_{false};
  std::atomic<bool> rendezvous_flag_{false};
  std::mutex control_mutex_;
  int exit_code_ = 0;
  StopReason stop_reason_ = StopReason::None;
  std::string stop_message_;

  std::mutex console_mutex_;
  std::string console_;
  UserProcess process_;
  std::mutex futex_mutex_;

  uint64_t rendezvous_count_ = 0;
  std::map<std::string, uint64_t> roi_baseline_;
  double wall_seconds_ = 0;
  uint64_t context_switches_ = 0;
  uint64_t trace_hash_ = 0;
  uint64_t deadlocks_ = 0;
};

}  // namespace rvdbt
