#pragma once

// Minimal task runtime with data-dependency clauses (in, out, inout,
// commutative) and a taskwait barrier, executed by a fixed worker pool.
//
// Ordering rules per resource, in submission order:
//   - in           waits for the latest writer (or commutative group);
//   - out / inout  waits for the latest writer and every reader since;
//   - commutative  tasks submitted back to back form a group: members wait for
//                  what preceded the group, never run concurrently with each
//                  other, and run in no particular order.
// Tasks are spawned from a single submitting thread.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

namespace pic::tasking {

struct ResourceId {
  std::uint64_t value = 0;
  friend bool operator==(ResourceId, ResourceId) = default;
  friend auto operator<=>(ResourceId, ResourceId) = default;
};

enum class Access { in, out, inout, commutative };

const char* access_name(Access a);

struct AccessClause {
  ResourceId resource;
  Access mode = Access::in;
};

inline AccessClause in(ResourceId r) { return {r, Access::in}; }
inline AccessClause out(ResourceId r) { return {r, Access::out}; }
inline AccessClause inout(ResourceId r) { return {r, Access::inout}; }
inline AccessClause commutative(ResourceId r) { return {r, Access::commutative}; }

class DuplicateResourceInClause : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class PoolAlreadyRunning : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct TaskInfo {
  std::uint64_t id = 0;
  std::string_view label;
  std::span<const AccessClause> clauses;
};

// Hooks invoked by workers around every task body. Implementations must be
// thread-safe.
class TaskObserver {
 public:
  virtual ~TaskObserver() = default;
  virtual void on_start(const TaskInfo& task, int worker) = 0;
  virtual void on_end(const TaskInfo& task, int worker) = 0;
};

namespace detail {
struct Node;
struct ResourceState;
}  // namespace detail

class TaskHandle {
 public:
  TaskHandle() = default;

  std::uint64_t id() const;
  std::string_view label() const;
  std::span<const AccessClause> clauses() const;
  bool done() const;
  bool valid() const { return node_ != nullptr; }

 private:
  friend class TaskRuntime;
  explicit TaskHandle(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;
};

class TaskRuntime {
 public:
  TaskRuntime();
  explicit TaskRuntime(int n_workers);
  ~TaskRuntime();

  TaskRuntime(const TaskRuntime&) = delete;
  TaskRuntime& operator=(const TaskRuntime&) = delete;

  // Starts n_workers threads. Throws PoolAlreadyRunning if already started.
  void run_pool(int n_workers);
  // Waits for all spawned tasks, then joins the workers.
  void shutdown();

  bool running() const { return !workers_.empty(); }
  int n_workers() const { return static_cast<int>(workers_.size()); }

  TaskHandle spawn(std::function<void()> body, std::vector<AccessClause> clauses = {},
                   std::string label = {});

  // Returns once every previously spawned task has completed. The first
  // exception escaping a task body since the last wait is rethrown here.
  void taskwait();
  // Returns once the given task has completed.
  void wait(const TaskHandle& task);

  // Must be set while no task is running.
  void set_observer(TaskObserver* obs) { observer_.store(obs); }

 private:
  struct WorkerQueue {
    std::mutex m;
    std::deque<std::shared_ptr<detail::Node>> q;
  };

  void worker_loop(int index);
  std::shared_ptr<detail::Node> pop(int index);
  void enqueue(std::shared_ptr<detail::Node> node, int queue);
  void execute(const std::shared_ptr<detail::Node>& node, int worker);
  bool try_acquire(const std::shared_ptr<detail::Node>& node, int worker);
  void release(detail::ResourceState* rs, int worker);
  void complete(const std::shared_ptr<detail::Node>& node, int worker);
  int pick_queue();
  void rethrow_pending();

  std::vector<std::thread> workers_;
  std::vector<std::unique_ptr<WorkerQueue>> queues_;
  std::unordered_map<std::uint64_t, std::unique_ptr<detail::ResourceState>> resources_;

  std::atomic<TaskObserver*> observer_{nullptr};
  std::atomic<std::uint64_t> next_id_{0};
  std::atomic<std::int64_t> outstanding_{0};
  std::atomic<int> queued_{0};
  std::uint64_t placement_state_ = 0x853C49E6748FEA9BULL;

  std::mutex sleep_m_;
  std::condition_variable sleep_cv_;
  bool stop_ = false;

  std::mutex done_m_;
  std::condition_variable done_cv_;

  std::mutex error_m_;
  std::exception_ptr error_;
};

// Worker count: the PIC_NUM_WORKERS environment variable when set, otherwise
// the number of physical cores available to this process.
int default_worker_count();
int physical_core_count();

inline constexpr const char* kWorkerEnvVar = "PIC_NUM_WORKERS";

// Records one NDJSON object per executed task: id, label, clauses, worker and
// start/end timestamps in nanoseconds since the recorder was created.
class TraceRecorder : public TaskObserver {
 public:
  TraceRecorder();
  void on_start(const TaskInfo& task, int worker) override;
  void on_end(const TaskInfo& task, int worker) override;
  void write(std::ostream& os) const;
  std::size_t size() const;

 private:
  struct Record {
    std::uint64_t id;
    std::string label;
    std::vector<AccessClause> clauses;
    int worker;
    std::int64_t start_ns;
    std::int64_t end_ns;
  };
  std::int64_t now_ns() const;

  std::chrono::steady_clock::time_point origin_;
  mutable std::mutex m_;
  std::unordered_map<std::uint64_t, std::int64_t> started_;
  std::vector<Record> records_;
};

// Checks the clause contract while tasks run: per resource, writers
// (out/inout/commutative) never overlap any other task holding the resource,
// and readers never overlap a writer.
class AccessAuditor : public TaskObserver {
 public:
  void on_start(const TaskInfo& task, int worker) override;
  void on_end(const TaskInfo& task, int worker) override;
  std::size_t violations() const { return violations_.load(); }

 private:
  struct Counters {
    int readers = 0;
    int writers = 0;
  };
  std::mutex m_;
  std::unordered_map<std::uint64_t, Counters> active_;
  std::atomic<std::size_t> violations_{0};
};

}  // namespace pic::tasking
