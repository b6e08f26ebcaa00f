#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>

#include "pic/backends.hpp"
#include "pic/kernels.hpp"

namespace pic {

namespace {

using Clock = std::chrono::steady_clock;
using tasking::AccessClause;
using tasking::Access;
using tasking::ResourceId;

std::int64_t elapsed_ns(Clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
}

struct LoopTimer {
  SimState& s;
  Clock::time_point t0 = Clock::now();
  ~LoopTimer() { s.clock.loop_seconds += elapsed_ns(t0) * 1e-9; }
};

bool hook_due(const RunOptions& opts, int iter) {
  return opts.hook && opts.hook_interval > 0 && iter % opts.hook_interval == 0;
}

// Runs one step stage by stage over all regions on the calling thread.
void sequential_step(SimState& s, bool shared_current) {
  const int n = s.n_regions();
  for (int r = 0; r < n; ++r) shared_current ? stage::advance_shared(s, r) : stage::advance(s, r);
  if (shared_current) {
    for (int r = 0; r < n; ++r) stage::collect_shared(s, r);
  } else {
    for (int r = 0; r < n; ++r) stage::reduce(s, r);
    for (int r = 0; r < n; ++r) stage::filter(s, r);
  }
  for (int r = 0; r < n; ++r) stage::field(s, r);
  for (int r = 0; r < n; ++r) stage::ghost(s, r);
  if (n > 1) {
    for (int r = 0; r < n; ++r) stage::migrate(s, r);
  }
  ++s.iter;
  if (window_shift_due(s.cfg, s.iter, s.moves)) {
    ++s.moves;
    for (int r = 0; r < n; ++r) stage::window(s, r, s.moves);
  }
}

// ---------------------------------------------------------------------------
// Fixed team of threads executing one job at a time; run() returns when every
// member finished, which is the stage barrier of the parallel-for backend.

class ThreadTeam {
 public:
  explicit ThreadTeam(int n) : size_(n) {
    for (int t = 1; t < n; ++t) threads_.emplace_back([this, t] { loop(t); });
  }

  ~ThreadTeam() {
    {
      std::lock_guard lk(m_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  int size() const { return size_; }

  template <typename F>
  void run(F&& f) {
    const std::function<void(int)> job = std::forward<F>(f);
    {
      std::lock_guard lk(m_);
      job_ = &job;
      remaining_ = size_ - 1;
      ++generation_;
    }
    cv_.notify_all();
    guarded(job, 0);
    {
      std::unique_lock lk(m_);
      done_cv_.wait(lk, [&] { return remaining_ == 0; });
      job_ = nullptr;
    }
    if (error_) {
      auto e = error_;
      error_ = nullptr;
      std::rethrow_exception(e);
    }
  }

 private:
  void guarded(const std::function<void(int)>& job, int tid) {
    try {
      job(tid);
    } catch (...) {
      std::lock_guard lk(err_m_);
      if (!error_) error_ = std::current_exception();
    }
  }

  void loop(int tid) {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(int)>* job = nullptr;
      {
        std::unique_lock lk(m_);
        cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        job = job_;
      }
      guarded(*job, tid);
      {
        std::lock_guard lk(m_);
        if (--remaining_ == 0) done_cv_.notify_one();
      }
    }
  }

  int size_;
  std::vector<std::thread> threads_;
  std::mutex m_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  const std::function<void(int)>* job_ = nullptr;
  std::uint64_t generation_ = 0;
  int remaining_ = 0;
  bool stop_ = false;
  std::mutex err_m_;
  std::exception_ptr error_;
};

// Static split of [0, n) into `parts` contiguous chunks.
std::pair<std::size_t, std::size_t> chunk(std::size_t n, int parts, int k) {
  const std::size_t base = n / parts;
  const std::size_t extra = n % parts;
  const std::size_t kk = static_cast<std::size_t>(k);
  const std::size_t begin = kk * base + std::min(kk, extra);
  return {begin, begin + base + (kk < extra ? 1 : 0)};
}

std::pair<int, int> row_chunk(int j0, int j1, int parts, int k) {
  const auto [b, e] = chunk(static_cast<std::size_t>(j1 - j0), parts, k);
  return {j0 + static_cast<int>(b), j0 + static_cast<int>(e)};
}

void parallel_for_step(SimState& s, ThreadTeam& team, std::vector<VecGrid>& priv) {
  Region& reg = s.regions[0];
  const auto& cfg = s.cfg;
  const int nt = team.size();
  const float dt = static_cast<float>(cfg.dt);
  const float dx = static_cast<float>(cfg.dx());
  const float dy = static_cast<float>(cfg.dy());
  const bool periodic = !cfg.moving_window;
  const PushBounds bounds{cfg.nx, reg.n_rows, periodic, true};
  VecGrid& j = reg.j_local.j;
  std::vector<std::size_t> marked(static_cast<std::size_t>(nt) * reg.species.size(), 0);

  // Stages 1-3: particles in static chunks, each thread with its own current.
  team.run([&](int tid) {
    const auto t0 = Clock::now();
    VecGrid& jt = tid == 0 ? j : priv[tid - 1];
    jt.fill();
    for (std::size_t sp = 0; sp < reg.species.size(); ++sp) {
      auto& parts = reg.species[sp].parts;
      const auto [b, e] = chunk(parts.size(), nt, tid);
      const PushParams prm{s.consts[sp], dt, dx, dy};
      marked[tid * reg.species.size() + sp] = push_particles(
          parts, b, e, reg.emf.e.view(), reg.emf.b.view(), jt.view(), prm, bounds, {});
    }
    s.clock.add(Stage::advance, elapsed_ns(t0));
  });
  for (std::size_t sp = 0; sp < reg.species.size(); ++sp) {
    std::size_t m = 0;
    for (int t = 0; t < nt; ++t) m += marked[t * reg.species.size() + sp];
    if (m) compact_particles(reg.species[sp].parts);
  }

  // Sum of the private copies, striped by rows.
  if (nt > 1) {
    team.run([&](int tid) {
      const auto t0 = Clock::now();
      const auto [r0, r1] = row_chunk(0, j.total_rows(), nt, tid);
      const std::size_t w = static_cast<std::size_t>(j.stride());
      auto& dst = j.storage();
      for (const auto& p : priv) {
        const auto& src = p.storage();
        for (std::size_t i = r0 * w; i < r1 * w; ++i) {
          dst[i].x += src[i].x;
          dst[i].y += src[i].y;
          dst[i].z += src[i].z;
        }
      }
      s.clock.add(Stage::reduce, elapsed_ns(t0));
    });
  }
  stage::reduce(s, 0);

  team.run([&](int tid) {
    const auto t0 = Clock::now();
    const auto [r0, r1] = row_chunk(0, reg.n_rows, nt, tid);
    if (periodic) fold_x_guards(j.view(), r0, r1);
    filter_current(j.view(), r0, r1, cfg.filter, periodic);
    s.clock.add(Stage::filter, elapsed_ns(t0));
  });
  ++s.step_marks[0][0];

  // Stage 4: Yee substeps split by rows, barrier after each.
  {
    const auto t0 = Clock::now();
    fill_current_guards(reg, reg, reg);
    s.clock.add(Stage::field, elapsed_ns(t0));
  }
  GridView e = reg.emf.e.view();
  GridView b = reg.emf.b.view();
  const int ny = reg.n_rows;
  auto substep = [&](auto&& body, int j0, int j1) {
    team.run([&](int tid) {
      const auto t0 = Clock::now();
      const auto [r0, r1] = row_chunk(j0, j1, nt, tid);
      body(r0, r1);
      s.clock.add(Stage::field, elapsed_ns(t0));
    });
  };
  substep([&](int r0, int r1) { advance_b(e, b, 0.5f * dt, dx, dy, r0, r1); }, -1, ny + 1);
  substep([&](int r0, int r1) { advance_e(e, b, j.view(), dt, dx, dy, r0, r1); }, 0,
          ny + kGuardHi);
  substep([&](int r0, int r1) { advance_b(e, b, 0.5f * dt, dx, dy, r0, r1); }, -1, ny + 1);
  if (periodic) {
    substep(
        [&](int r0, int r1) {
          refresh_x_guards(e, r0, r1);
          refresh_x_guards(b, r0, r1);
        },
        -kGuardLo, ny + kGuardHi);
  }
  ++s.step_marks[0][1];
  stage::ghost(s, 0);

  ++s.iter;
  if (window_shift_due(cfg, s.iter, s.moves)) {
    ++s.moves;
    stage::window(s, 0, s.moves);
  }
}

// ---------------------------------------------------------------------------
// Task graph

enum Res : std::uint64_t { kP, kEB, kEBG, kJ, kJG, kOLo, kOHi, kJB, kResCount };

ResourceId rid(int region, Res kind) {
  return {static_cast<std::uint64_t>(region) * kResCount + kind};
}

// Merges clauses naming the same resource (neighbors coincide on small rings),
// keeping the strongest access.
std::vector<AccessClause> clauses(std::initializer_list<AccessClause> list) {
  std::vector<AccessClause> out;
  for (const auto& c : list) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const AccessClause& o) { return o.resource == c.resource; });
    if (it == out.end()) {
      out.push_back(c);
    } else if (it->mode != c.mode) {
      it->mode = Access::inout;
    }
  }
  return out;
}

class GraphDriver {
 public:
  GraphDriver(SimState& s, BackendKind kind, tasking::TaskRuntime& rt, const RunOptions& opts)
      : s_(s), kind_(kind), rt_(rt), opts_(opts), n_(s.n_regions()) {}

  // Spawns every task of the step that completes iteration `iter`.
  std::vector<tasking::TaskHandle> spawn_step(int iter, int moves_after, bool shift) {
    using namespace tasking;
    std::vector<TaskHandle> h;
    SimState& s = s_;
    const bool comm = is_commutative(kind_);

    for (int r = 0; r < n_; ++r) {
      if (comm) {
        h.push_back(rt_.spawn([&s, r] { stage::advance_shared(s, r); },
                              clauses({inout(rid(r, kP)), in(rid(r, kEB)), in(rid(r, kEBG)),
                                       commutative(rid(r, kJB)), commutative(rid(up(r), kJB)),
                                       out(rid(r, kOLo)), out(rid(r, kOHi))}),
                              "advance"));
      } else {
        h.push_back(rt_.spawn([&s, r] { stage::advance(s, r); },
                              clauses({inout(rid(r, kP)), in(rid(r, kEB)), in(rid(r, kEBG)),
                                       out(rid(r, kJ)), out(rid(r, kJG)), out(rid(r, kOLo)),
                                       out(rid(r, kOHi))}),
                              "advance"));
      }
    }
    if (comm) {
      for (int r = 0; r < n_; ++r) {
        h.push_back(rt_.spawn([&s, r] { stage::collect_shared(s, r); },
                              clauses({out(rid(r, kJ)), in(rid(r, kJB)), in(rid(up(r), kJB))}),
                              "filter"));
      }
    } else {
      for (int r = 0; r < n_; ++r) {
        h.push_back(rt_.spawn([&s, r] { stage::reduce(s, r); },
                              clauses({inout(rid(r, kJ)), in(rid(lo(r), kJG)), in(rid(up(r), kJG))}),
                              "reduce"));
      }
      for (int r = 0; r < n_; ++r) {
        h.push_back(rt_.spawn([&s, r] { stage::filter(s, r); }, clauses({inout(rid(r, kJ))}),
                              "filter"));
      }
    }
    for (int r = 0; r < n_; ++r) {
      h.push_back(rt_.spawn([&s, r] { stage::field(s, r); },
                            clauses({in(rid(r, kJ)), in(rid(lo(r), kJ)), in(rid(up(r), kJ)),
                                     inout(rid(r, kJG)), inout(rid(r, kEB)), inout(rid(r, kEBG))}),
                            "field"));
    }
    for (int r = 0; r < n_; ++r) {
      h.push_back(rt_.spawn([&s, r] { stage::ghost(s, r); },
                            clauses({inout(rid(r, kEBG)), in(rid(lo(r), kEB)), in(rid(up(r), kEB))}),
                            "ghost"));
    }
    if (n_ > 1) {
      for (int r = 0; r < n_; ++r) {
        h.push_back(rt_.spawn([&s, r] { stage::migrate(s, r); },
                              clauses({inout(rid(r, kP)), inout(rid(lo(r), kOHi)),
                                       inout(rid(up(r), kOLo))}),
                              "migrate"));
      }
    }
    if (shift) {
      for (int r = 0; r < n_; ++r) {
        h.push_back(rt_.spawn([&s, r, moves_after] { stage::window(s, r, moves_after); },
                              clauses({inout(rid(r, kP)), inout(rid(r, kEB)), inout(rid(r, kEBG))}),
                              "window"));
      }
    }
    if (hook_due(opts_, iter) && is_async(kind_)) {
      std::vector<AccessClause> all;
      for (int r = 0; r < n_; ++r) {
        for (Res k : {kP, kEB, kEBG, kJ}) all.push_back(in(rid(r, k)));
      }
      const StepHook& hook = opts_.hook;
      h.push_back(rt_.spawn([&s, &hook, iter] { hook(s, iter); }, std::move(all), "hook"));
    }
    return h;
  }

 private:
  int lo(int r) const { return lower_neighbor(r, n_); }
  int up(int r) const { return upper_neighbor(r, n_); }

  SimState& s_;
  BackendKind kind_;
  tasking::TaskRuntime& rt_;
  const RunOptions& opts_;
  int n_;
};

void tasklike_step(SimState& s, tasking::TaskRuntime& rt) {
  const int n = s.n_regions();
  auto each = [&](auto&& fn, const char* label) {
    for (int r = 0; r < n; ++r) rt.spawn([&fn, &s, r] { fn(s, r); }, {}, label);
    rt.taskwait();
  };
  each(stage::advance, "advance");
  each(stage::reduce, "reduce");
  each(stage::filter, "filter");
  each(stage::field, "field");
  each(stage::ghost, "ghost");
  if (n > 1) each(stage::migrate, "migrate");
  ++s.iter;
  if (window_shift_due(s.cfg, s.iter, s.moves)) {
    const int m = ++s.moves;
    each([m](SimState& st, int r) { stage::window(st, r, m); }, "window");
  }
}

void check_commutative_heights(const SimState& s) {
  if (s.n_regions() < 4) return;
  for (const auto& r : s.regions) {
    if (r.n_rows < 3) {
      throw ConfigError(ConfigError::Code::region_too_thin, "n_regions",
                        "n_regions: commutative backends need bands of at least 3 rows with " +
                            std::to_string(s.n_regions()) + " regions over " +
                            std::to_string(s.cfg.ny) + " rows");
    }
  }
}

}  // namespace

void run_serial(SimState& s, int n_steps, const RunOptions& opts) {
  LoopTimer timer{s};
  for (int k = 0; k < n_steps; ++k) {
    sequential_step(s, false);
    if (hook_due(opts, s.iter)) opts.hook(s, s.iter);
  }
}

void run_parallel_for(SimState& s, int n_steps, int n_threads, const RunOptions& opts) {
  if (s.n_regions() != 1) {
    throw std::invalid_argument("parallel-for backend runs on a single whole-grid region");
  }
  if (n_threads < 1) throw std::invalid_argument("parallel-for: n_threads must be >= 1");
  ThreadTeam team(n_threads);
  const VecGrid& j = s.regions[0].j_local.j;
  std::vector<VecGrid> priv(n_threads - 1, VecGrid(j.nx(), j.ny()));
  LoopTimer timer{s};
  for (int k = 0; k < n_steps; ++k) {
    parallel_for_step(s, team, priv);
    if (hook_due(opts, s.iter)) opts.hook(s, s.iter);
  }
}

void run_task_backend(SimState& s, int n_steps, BackendKind kind, int n_workers,
                      const RunOptions& opts) {
  if (!is_task_backend(kind)) {
    throw UnknownBackend("'" + std::string(backend_name(kind)) + "' is not a task backend");
  }
  if (is_commutative(kind)) {
    check_commutative_heights(s);
    if (s.shared_j.nx() != s.cfg.nx || s.shared_j.ny() != s.cfg.ny) {
      s.shared_j = VecGrid(s.cfg.nx, s.cfg.ny);
    }
  }
  tasking::TaskRuntime rt(n_workers);
  rt.set_observer(opts.observer);
  LoopTimer timer{s};

  if (kind == BackendKind::tasklike) {
    for (int k = 0; k < n_steps; ++k) {
      tasklike_step(s, rt);
      if (hook_due(opts, s.iter)) opts.hook(s, s.iter);
    }
    return;
  }

  GraphDriver graph(s, kind, rt, opts);
  if (!is_async(kind)) {
    for (int k = 0; k < n_steps; ++k) {
      const int iter = s.iter + 1;
      const bool shift = window_shift_due(s.cfg, iter, s.moves);
      graph.spawn_step(iter, s.moves + (shift ? 1 : 0), shift);
      rt.taskwait();
      s.iter = iter;
      if (shift) ++s.moves;
      if (hook_due(opts, s.iter)) opts.hook(s, s.iter);
    }
    return;
  }

  // Async: the graph spans steps; only the look-ahead window throttles.
  const int window = std::max(1, opts.lookahead);
  std::deque<std::vector<tasking::TaskHandle>> in_flight;
  int iter = s.iter;
  int moves = s.moves;
  for (int k = 0; k < n_steps; ++k) {
    if (static_cast<int>(in_flight.size()) >= window) {
      for (const auto& h : in_flight.front()) rt.wait(h);
      in_flight.pop_front();
    }
    ++iter;
    const bool shift = window_shift_due(s.cfg, iter, moves);
    if (shift) ++moves;
    in_flight.push_back(graph.spawn_step(iter, moves, shift));
  }
  rt.taskwait();
  s.iter = iter;
  s.moves = moves;
}

void run_backend(SimState& s, int n_steps, BackendKind kind, int n_workers,
                 const RunOptions& opts) {
  switch (kind) {
    case BackendKind::serial: return run_serial(s, n_steps, opts);
    case BackendKind::parallel_for: return run_parallel_for(s, n_steps, n_workers, opts);
    default: return run_task_backend(s, n_steps, kind, n_workers, opts);
  }
}

}  // namespace pic
