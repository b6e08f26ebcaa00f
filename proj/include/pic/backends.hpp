#pragma once

// Time-loop drivers. Every backend runs the same per-region stage functions:
//
//   advance   interpolate + push + deposit (+ staging of leaving particles)
//   reduce    add neighbor guard-row deposits into owned rows
//   filter    x fold of periodic guard deposits, then the current filter
//   field     J guard rows from neighbors, then the Yee step
//   ghost     E/B guard rows from neighbors
//   migrate   pull particles staged by the neighbors
//   window    moving-window shift and injection (moving_window only)
//
// serial and parallel-for run a single region covering the whole grid.

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pic/core.hpp"
#include "pic/regions.hpp"
#include "pic/tasking.hpp"

namespace pic {

enum class BackendKind {
  serial,
  parallel_for,
  tasklike,
  reduction_sync,
  reduction_async,
  commutative_sync,
  commutative_async,
};

class UnknownBackend : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

BackendKind parse_backend(std::string_view name);
std::string_view backend_name(BackendKind kind);
const std::vector<BackendKind>& all_backends();
bool is_task_backend(BackendKind kind);
bool is_commutative(BackendKind kind);
bool is_async(BackendKind kind);

enum class Stage { advance, reduce, filter, field, ghost, migrate, window, count };
inline constexpr std::size_t kStageCount = static_cast<std::size_t>(Stage::count);
std::string_view stage_name(Stage s);

// Accumulated wall time per stage, summed over all threads that ran it.
class StageClock {
 public:
  StageClock() = default;
  StageClock(const StageClock& o) { *this = o; }
  StageClock& operator=(const StageClock& o);

  void add(Stage s, std::int64_t ns) { ns_[static_cast<std::size_t>(s)].fetch_add(ns); }
  double seconds(Stage s) const { return ns_[static_cast<std::size_t>(s)].load() * 1e-9; }
  void reset();

  double loop_seconds = 0;  // wall time of the time loop(s)

 private:
  std::array<std::atomic<std::int64_t>, kStageCount> ns_{};
};

struct SimState {
  SimConfig cfg;
  std::vector<SpeciesConstants> consts;
  std::vector<Region> regions;
  VecGrid shared_j;  // global current, commutative variants only
  int iter = 0;
  int moves = 0;     // moving-window shifts performed so far
  StageClock clock;
  // Per-region count of filtered and field-advanced steps; the field advance
  // of step s requires the current of step s to be filtered.
  std::vector<std::array<int, 2>> step_marks;

  int n_regions() const { return static_cast<int>(regions.size()); }
  std::size_t particle_count() const;
};

// Validated state split into n_regions regions (cfg.n_regions when < 1).
SimState make_state(const SimConfig& cfg, int n_regions = 0);

using StepHook = std::function<void(const SimState&, int iter)>;

struct RunOptions {
  StepHook hook;              // called at step boundaries where iter % hook_interval == 0
  int hook_interval = 0;      // 0 disables the hook
  tasking::TaskObserver* observer = nullptr;  // task backends only
  int lookahead = 4;          // async variants: steps in flight
};

// True when the window must shift after completing step `iter`, given the
// number of shifts already performed.
bool window_shift_due(const SimConfig& cfg, int iter, int moves);

void run_serial(SimState& state, int n_steps, const RunOptions& opts = {});
void run_parallel_for(SimState& state, int n_steps, int n_threads, const RunOptions& opts = {});
void run_task_backend(SimState& state, int n_steps, BackendKind kind, int n_workers,
                      const RunOptions& opts = {});
// Dispatches on kind; n_workers is ignored by serial.
void run_backend(SimState& state, int n_steps, BackendKind kind, int n_workers,
                 const RunOptions& opts = {});

namespace stage {

void advance(SimState& s, int r);               // deposits into the region's own buffer
void advance_shared(SimState& s, int r);        // deposits into s.shared_j
void reduce(SimState& s, int r);
void filter(SimState& s, int r);
void collect_shared(SimState& s, int r);        // shared_j rows -> region buffer, then filter
void field(SimState& s, int r);
void ghost(SimState& s, int r);
void migrate(SimState& s, int r);
void window(SimState& s, int r, int moves_after);

}  // namespace stage

}  // namespace pic
