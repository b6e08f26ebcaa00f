#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <string>
#include <utility>

#include <sched.h>

#include <json.hpp>

#include "pic/tasking.hpp"

namespace pic::tasking {

namespace detail {

struct Node {
  std::uint64_t id = 0;
  std::function<void()> body;
  std::vector<AccessClause> clauses;
  std::string label;
  std::vector<ResourceState*> comm;  // commutative locks, sorted by resource id

  std::atomic<int> pending{1};
  std::mutex m;
  bool done = false;
  std::atomic<bool> finished{false};
  std::vector<std::shared_ptr<Node>> successors;
};

struct ResourceState {
  // Dependency tracking; touched only by the submitting thread.
  std::vector<std::shared_ptr<Node>> writers;  // last writer, or the open commutative group
  bool commutative_group = false;
  std::vector<std::shared_ptr<Node>> group_preds;
  std::vector<std::shared_ptr<Node>> readers;

  // Commutative exclusion; touched by workers.
  std::uint64_t id = 0;
  std::mutex lock_m;
  bool held = false;
  std::vector<std::shared_ptr<Node>> parked;
};

}  // namespace detail

using detail::Node;
using detail::ResourceState;

const char* access_name(Access a) {
  switch (a) {
    case Access::in: return "in";
    case Access::out: return "out";
    case Access::inout: return "inout";
    case Access::commutative: return "commutative";
  }
  return "?";
}

std::uint64_t TaskHandle::id() const { return node_->id; }
std::string_view TaskHandle::label() const { return node_->label; }
std::span<const AccessClause> TaskHandle::clauses() const { return node_->clauses; }
bool TaskHandle::done() const { return node_->finished.load(std::memory_order_acquire); }

namespace {

void add_edge(const std::shared_ptr<Node>& pred, const std::shared_ptr<Node>& node) {
  if (pred == node) return;
  std::lock_guard lk(pred->m);
  if (pred->done) return;
  pred->successors.push_back(node);
  node->pending.fetch_add(1, std::memory_order_relaxed);
}

// Completed nodes need not be tracked as predecessors any more.
void prune(std::vector<std::shared_ptr<Node>>& v) {
  if (v.size() < 16) return;
  std::erase_if(v, [](const auto& n) { return n->finished.load(std::memory_order_acquire); });
}

}  // namespace

TaskRuntime::TaskRuntime() = default;

TaskRuntime::TaskRuntime(int n_workers) { run_pool(n_workers); }

TaskRuntime::~TaskRuntime() {
  if (running()) shutdown();
}

void TaskRuntime::run_pool(int n_workers) {
  if (running()) throw PoolAlreadyRunning("task pool is already running");
  if (n_workers < 1) throw std::invalid_argument("run_pool: n_workers must be >= 1");
  stop_ = false;
  queues_.clear();
  for (int w = 0; w < n_workers; ++w) queues_.push_back(std::make_unique<WorkerQueue>());
  for (int w = 0; w < n_workers; ++w) workers_.emplace_back([this, w] { worker_loop(w); });
}

void TaskRuntime::shutdown() {
  if (!running()) return;
  {
    std::unique_lock lk(done_m_);
    done_cv_.wait(lk, [&] { return outstanding_.load() == 0; });
  }
  {
    std::lock_guard lk(sleep_m_);
    stop_ = true;
  }
  sleep_cv_.notify_all();
  for (auto& t : workers_) t.join();
  workers_.clear();
  queues_.clear();
  resources_.clear();
}

TaskHandle TaskRuntime::spawn(std::function<void()> body, std::vector<AccessClause> clauses,
                              std::string label) {
  if (!running()) throw std::logic_error("spawn: task pool is not running");
  {
    std::set<std::uint64_t> seen;
    for (const auto& c : clauses) {
      if (!seen.insert(c.resource.value).second) {
        throw DuplicateResourceInClause("resource " + std::to_string(c.resource.value) +
                                        " listed twice in task '" + label + "'");
      }
    }
  }

  auto node = std::make_shared<Node>();
  node->id = next_id_.fetch_add(1);
  node->body = std::move(body);
  node->clauses = std::move(clauses);
  node->label = std::move(label);

  for (const auto& c : node->clauses) {
    auto& slot = resources_[c.resource.value];
    if (!slot) {
      slot = std::make_unique<ResourceState>();
      slot->id = c.resource.value;
    }
    ResourceState& rs = *slot;
    switch (c.mode) {
      case Access::in:
        for (const auto& w : rs.writers) add_edge(w, node);
        prune(rs.readers);
        rs.readers.push_back(node);
        break;
      case Access::out:
      case Access::inout:
        for (const auto& r : rs.readers) add_edge(r, node);
        for (const auto& w : rs.writers) add_edge(w, node);
        rs.writers.assign(1, node);
        rs.commutative_group = false;
        rs.group_preds.clear();
        rs.readers.clear();
        break;
      case Access::commutative:
        if (rs.commutative_group && rs.readers.empty()) {
          // Join the open group: same predecessors, no order among members.
          for (const auto& p : rs.group_preds) add_edge(p, node);
          prune(rs.writers);
          rs.writers.push_back(node);
        } else {
          std::vector<std::shared_ptr<Node>> preds = rs.readers;
          preds.insert(preds.end(), rs.writers.begin(), rs.writers.end());
          for (const auto& p : preds) add_edge(p, node);
          rs.group_preds = std::move(preds);
          rs.writers.assign(1, node);
          rs.commutative_group = true;
          rs.readers.clear();
        }
        node->comm.push_back(&rs);
        break;
    }
  }
  std::sort(node->comm.begin(), node->comm.end(),
            [](const ResourceState* a, const ResourceState* b) { return a->id < b->id; });

  outstanding_.fetch_add(1);
  if (node->pending.fetch_sub(1) == 1) enqueue(node, pick_queue());
  return TaskHandle(node);
}

int TaskRuntime::pick_queue() {
  // Random placement spreads ready tasks over workers; stealing rebalances.
  placement_state_ = placement_state_ * 6364136223846793005ULL + 1442695040888963407ULL;
  return static_cast<int>((placement_state_ >> 33) % queues_.size());
}

void TaskRuntime::enqueue(std::shared_ptr<Node> node, int queue) {
  {
    std::lock_guard lk(queues_[queue]->m);
    queues_[queue]->q.push_back(std::move(node));
  }
  queued_.fetch_add(1);
  { std::lock_guard lk(sleep_m_); }
  sleep_cv_.notify_one();
}

std::shared_ptr<Node> TaskRuntime::pop(int index) {
  const int n = static_cast<int>(queues_.size());
  for (int k = 0; k < n; ++k) {
    WorkerQueue& wq = *queues_[(index + k) % n];
    std::lock_guard lk(wq.m);
    if (wq.q.empty()) continue;
    auto node = std::move(wq.q.front());
    wq.q.pop_front();
    queued_.fetch_sub(1);
    return node;
  }
  return nullptr;
}

void TaskRuntime::worker_loop(int index) {
  for (;;) {
    if (auto node = pop(index)) {
      execute(node, index);
      continue;
    }
    std::unique_lock lk(sleep_m_);
    sleep_cv_.wait(lk, [&] { return stop_ || queued_.load() > 0; });
    if (stop_ && queued_.load() == 0) return;
  }
}

bool TaskRuntime::try_acquire(const std::shared_ptr<Node>& node, int worker) {
  for (std::size_t k = 0; k < node->comm.size(); ++k) {
    ResourceState* rs = node->comm[k];
    std::unique_lock lk(rs->lock_m);
    if (rs->held) {
      rs->parked.push_back(node);
      lk.unlock();
      for (std::size_t u = 0; u < k; ++u) release(node->comm[u], worker);
      return false;
    }
    rs->held = true;
  }
  return true;
}

void TaskRuntime::release(ResourceState* rs, int worker) {
  std::vector<std::shared_ptr<Node>> parked;
  {
    std::lock_guard lk(rs->lock_m);
    rs->held = false;
    parked.swap(rs->parked);
  }
  for (auto& p : parked) enqueue(std::move(p), worker);
}

void TaskRuntime::execute(const std::shared_ptr<Node>& node, int worker) {
  if (!node->comm.empty() && !try_acquire(node, worker)) return;

  TaskObserver* obs = observer_.load();
  const TaskInfo info{node->id, node->label, node->clauses};
  if (obs) obs->on_start(info, worker);
  try {
    node->body();
  } catch (...) {
    std::lock_guard lk(error_m_);
    if (!error_) error_ = std::current_exception();
  }
  if (obs) obs->on_end(info, worker);

  for (ResourceState* rs : node->comm) release(rs, worker);
  complete(node, worker);
}

void TaskRuntime::complete(const std::shared_ptr<Node>& node, int worker) {
  std::vector<std::shared_ptr<Node>> succ;
  {
    std::lock_guard lk(node->m);
    node->done = true;
    succ.swap(node->successors);
  }
  node->body = nullptr;
  for (auto& s : succ) {
    if (s->pending.fetch_sub(1) == 1) enqueue(std::move(s), worker);
  }
  {
    std::lock_guard lk(done_m_);
    node->finished.store(true, std::memory_order_release);
    outstanding_.fetch_sub(1);
  }
  done_cv_.notify_all();
}

void TaskRuntime::rethrow_pending() {
  std::exception_ptr e;
  {
    std::lock_guard lk(error_m_);
    std::swap(e, error_);
  }
  if (e) std::rethrow_exception(e);
}

void TaskRuntime::taskwait() {
  {
    std::unique_lock lk(done_m_);
    done_cv_.wait(lk, [&] { return outstanding_.load() == 0; });
  }
  rethrow_pending();
}

void TaskRuntime::wait(const TaskHandle& task) {
  if (!task.valid()) return;
  {
    std::unique_lock lk(done_m_);
    done_cv_.wait(lk, [&] { return task.done(); });
  }
  rethrow_pending();
}

int physical_core_count() {
  cpu_set_t mask;
  CPU_ZERO(&mask);
  if (sched_getaffinity(0, sizeof(mask), &mask) != 0) {
    return std::max(1u, std::thread::hardware_concurrency());
  }
  std::set<std::pair<int, int>> cores;
  int logical = 0;
  for (int cpu = 0; cpu < CPU_SETSIZE; ++cpu) {
    if (!CPU_ISSET(cpu, &mask)) continue;
    ++logical;
    const std::string base = "/sys/devices/system/cpu/cpu" + std::to_string(cpu) + "/topology/";
    std::ifstream pkg(base + "physical_package_id");
    std::ifstream core(base + "core_id");
    int p = 0;
    int c = cpu;
    if (pkg && core && (pkg >> p) && (core >> c)) {
      cores.insert({p, c});
    } else {
      cores.insert({-1, cpu});
    }
  }
  return std::max<int>(1, cores.empty() ? logical : static_cast<int>(cores.size()));
}

int default_worker_count() {
  if (const char* env = std::getenv(kWorkerEnvVar)) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return physical_core_count();
}

// ---------------------------------------------------------------------------

TraceRecorder::TraceRecorder() : origin_(std::chrono::steady_clock::now()) {}

std::int64_t TraceRecorder::now_ns() const {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() -
                                                              origin_)
      .count();
}

void TraceRecorder::on_start(const TaskInfo& task, int) {
  const auto t = now_ns();
  std::lock_guard lk(m_);
  started_[task.id] = t;
}

void TraceRecorder::on_end(const TaskInfo& task, int worker) {
  const auto t = now_ns();
  std::lock_guard lk(m_);
  auto it = started_.find(task.id);
  const std::int64_t t0 = it == started_.end() ? t : it->second;
  if (it != started_.end()) started_.erase(it);
  records_.push_back({task.id, std::string(task.label),
                      std::vector<AccessClause>(task.clauses.begin(), task.clauses.end()), worker,
                      t0, t});
}

std::size_t TraceRecorder::size() const {
  std::lock_guard lk(m_);
  return records_.size();
}

void TraceRecorder::write(std::ostream& os) const {
  std::lock_guard lk(m_);
  for (const auto& r : records_) {
    nlohmann::json clauses = nlohmann::json::array();
    for (const auto& c : r.clauses) {
      clauses.push_back({{"resource", c.resource.value}, {"mode", access_name(c.mode)}});
    }
    nlohmann::json j = {{"id", r.id},          {"label", r.label},        {"clauses", clauses},
                        {"worker", r.worker},  {"start_ns", r.start_ns},  {"end_ns", r.end_ns}};
    os << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------

void AccessAuditor::on_start(const TaskInfo& task, int) {
  std::lock_guard lk(m_);
  for (const auto& c : task.clauses) {
    Counters& k = active_[c.resource.value];
    if (c.mode == Access::in) {
      if (k.writers > 0) violations_.fetch_add(1);
      ++k.readers;
    } else {
      if (k.writers > 0 || k.readers > 0) violations_.fetch_add(1);
      ++k.writers;
    }
  }
}

void AccessAuditor::on_end(const TaskInfo& task, int) {
  std::lock_guard lk(m_);
  for (const auto& c : task.clauses) {
    Counters& k = active_[c.resource.value];
    if (c.mode == Access::in) {
      --k.readers;
    } else {
      --k.writers;
    }
  }
}

}  // namespace pic::tasking
