#include <cassert>
#include <chrono>

#include "pic/backends.hpp"
#include "pic/kernels.hpp"

namespace pic {

namespace {

using Clock = std::chrono::steady_clock;

struct StageTimer {
  StageClock& clock;
  Stage stage;
  Clock::time_point t0 = Clock::now();
  ~StageTimer() {
    clock.add(stage, std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count());
  }
};

constexpr std::array<std::string_view, 7> kBackendNames = {
    "serial",          "parallel-for",     "tasklike",          "reduction-sync",
    "reduction-async", "commutative-sync", "commutative-async",
};

constexpr std::array<std::string_view, kStageCount> kStageNames = {
    "advance", "reduce", "filter", "field", "ghost", "migrate", "window",
};

Region& lower_of(SimState& s, int r) { return s.regions[lower_neighbor(r, s.n_regions())]; }
Region& upper_of(SimState& s, int r) { return s.regions[upper_neighbor(r, s.n_regions())]; }

void push_region(SimState& s, int r, GridView j) {
  Region& reg = s.regions[r];
  const auto& cfg = s.cfg;
  const PushBounds bounds{cfg.nx, reg.n_rows, !cfg.moving_window, s.n_regions() == 1};
  const ConstGridView e = reg.emf.e.view();
  const ConstGridView b = reg.emf.b.view();
  for (std::size_t sp = 0; sp < reg.species.size(); ++sp) {
    auto& buf = reg.species[sp];
    const PushParams prm{s.consts[sp], static_cast<float>(cfg.dt), static_cast<float>(cfg.dx()),
                         static_cast<float>(cfg.dy())};
    const std::size_t marked = push_particles(buf.parts, 0, buf.parts.size(), e, b, j, prm, bounds,
                                              {&buf.out_lo, &buf.out_hi});
    if (marked) compact_particles(buf.parts);
  }
}

void filter_region(SimState& s, Region& reg) {
  GridView j = reg.j_local.j.view();
  const bool periodic = !s.cfg.moving_window;
  if (periodic) fold_x_guards(j, 0, reg.n_rows);
  filter_current(j, 0, reg.n_rows, s.cfg.filter, periodic);
}

}  // namespace

BackendKind parse_backend(std::string_view name) {
  for (std::size_t k = 0; k < kBackendNames.size(); ++k) {
    if (kBackendNames[k] == name) return static_cast<BackendKind>(k);
  }
  throw UnknownBackend("unknown backend '" + std::string(name) + "'");
}

std::string_view backend_name(BackendKind kind) { return kBackendNames[static_cast<std::size_t>(kind)]; }

const std::vector<BackendKind>& all_backends() {
  static const std::vector<BackendKind> all = {
      BackendKind::serial,          BackendKind::parallel_for,     BackendKind::tasklike,
      BackendKind::reduction_sync,  BackendKind::reduction_async,  BackendKind::commutative_sync,
      BackendKind::commutative_async,
  };
  return all;
}

bool is_task_backend(BackendKind kind) {
  return kind != BackendKind::serial && kind != BackendKind::parallel_for;
}

bool is_commutative(BackendKind kind) {
  return kind == BackendKind::commutative_sync || kind == BackendKind::commutative_async;
}

bool is_async(BackendKind kind) {
  return kind == BackendKind::reduction_async || kind == BackendKind::commutative_async;
}

std::string_view stage_name(Stage s) { return kStageNames[static_cast<std::size_t>(s)]; }

StageClock& StageClock::operator=(const StageClock& o) {
  for (std::size_t k = 0; k < kStageCount; ++k) ns_[k].store(o.ns_[k].load());
  loop_seconds = o.loop_seconds;
  return *this;
}

void StageClock::reset() {
  for (auto& v : ns_) v.store(0);
  loop_seconds = 0;
}

std::size_t SimState::particle_count() const {
  std::size_t n = 0;
  for (const auto& r : regions) n += r.particle_count();
  return n;
}

SimState make_state(const SimConfig& cfg, int n_regions) {
  SimState s;
  s.cfg = cfg;
  if (n_regions >= 1) s.cfg.n_regions = n_regions;
  validate_config(s.cfg);
  for (const auto& sp : s.cfg.species) s.consts.push_back(species_constants(sp));
  s.regions = partition(s.cfg);
  s.step_marks.assign(s.regions.size(), {0, 0});
  for (auto& reg : s.regions) {
    if (!s.cfg.moving_window) {
      refresh_x_guards(reg.emf.e.view(), -kGuardLo, reg.n_rows + kGuardHi);
      refresh_x_guards(reg.emf.b.view(), -kGuardLo, reg.n_rows + kGuardHi);
    }
  }
  for (int r = 0; r < s.n_regions(); ++r) stage::ghost(s, r);
  s.clock.reset();
  return s;
}

bool window_shift_due(const SimConfig& cfg, int iter, int moves) {
  return cfg.moving_window && iter * cfg.dt > cfg.dx() * (moves + 1);
}

namespace stage {

void advance(SimState& s, int r) {
  StageTimer t{s.clock, Stage::advance};
  Region& reg = s.regions[r];
  reg.j_local.j.fill();
  push_region(s, r, reg.j_local.j.view());
}

void advance_shared(SimState& s, int r) {
  StageTimer t{s.clock, Stage::advance};
  Region& reg = s.regions[r];
  push_region(s, r, s.shared_j.view().rows_from(reg.y0, reg.n_rows));
}

void reduce(SimState& s, int r) {
  StageTimer t{s.clock, Stage::reduce};
  reduce_ghost_current(s.regions[r], lower_of(s, r), upper_of(s, r));
}

void filter(SimState& s, int r) {
  StageTimer t{s.clock, Stage::filter};
  filter_region(s, s.regions[r]);
  ++s.step_marks[r][0];
}

void collect_shared(SimState& s, int r) {
  StageTimer t{s.clock, Stage::filter};
  Region& reg = s.regions[r];
  VecGrid& g = s.shared_j;
  const int n = s.n_regions();
  const int ny = g.ny();
  auto add_row = [&](int dst, int src) {
    Float3* d = g.row(dst) - g.gx_lo();
    const Float3* a = g.row(src) - g.gx_lo();
    for (std::ptrdiff_t i = 0; i < g.stride(); ++i) {
      d[i].x += a[i].x;
      d[i].y += a[i].y;
      d[i].z += a[i].z;
    }
  };
  // Deposits past the global y edges belong to the opposite end of the ring.
  if (r == 0) {
    add_row(0, ny);
    add_row(1, ny + 1);
    g.zero_rows(ny, ny + 2);
  }
  if (r == n - 1) {
    add_row(ny - 1, -1);
    g.zero_rows(-1, 0);
  }
  VecGrid& jl = reg.j_local.j;
  for (int row = 0; row < reg.n_rows; ++row) {
    const Float3* src = g.row(reg.y0 + row) - g.gx_lo();
    std::copy(src, src + g.stride(), jl.row(row) - jl.gx_lo());
  }
  g.zero_rows(reg.y0, reg.y0 + reg.n_rows);
  filter_region(s, reg);
  ++s.step_marks[r][0];
}

void field(SimState& s, int r) {
  StageTimer t{s.clock, Stage::field};
  Region& reg = s.regions[r];
  assert(s.step_marks[r][0] == s.step_marks[r][1] + 1);
  fill_current_guards(reg, lower_of(s, r), upper_of(s, r));
  yee_advance(reg.emf, reg.j_local.j.view(), static_cast<float>(s.cfg.dt),
              static_cast<float>(s.cfg.dx()), static_cast<float>(s.cfg.dy()), !s.cfg.moving_window);
  ++s.step_marks[r][1];
}

void ghost(SimState& s, int r) {
  StageTimer t{s.clock, Stage::ghost};
  exchange_ghost_fields(s.regions[r], lower_of(s, r), upper_of(s, r));
}

void migrate(SimState& s, int r) {
  StageTimer t{s.clock, Stage::migrate};
  if (s.n_regions() == 1) return;
  migrate_particles(s.regions[r], lower_of(s, r), upper_of(s, r));
}

void window(SimState& s, int r, int moves_after) {
  StageTimer t{s.clock, Stage::window};
  Region& reg = s.regions[r];
  shift_grid_left(reg.emf.e);
  shift_grid_left(reg.emf.b);
  const int nx = s.cfg.nx;
  for (std::size_t sp = 0; sp < reg.species.size(); ++sp) {
    auto& parts = reg.species[sp].parts;
    shift_particles_left(parts);
    InjectionBlock block;
    block.col0 = nx - 1;
    block.ncols = 1;
    block.row0 = reg.y0;
    block.nrows = reg.n_rows;
    block.local_row0 = reg.y0;
    block.abs_col_offset = moves_after;
    inject_block(s.cfg.species[sp], sp, s.cfg.seed, block, parts);
  }
}

}  // namespace stage

}  // namespace pic
