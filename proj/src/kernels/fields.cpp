#include <algorithm>
#include <vector>

#include "pic/kernels.hpp"

namespace pic {

namespace {

inline int wrap(int i, int n) { return ((i % n) + n) % n; }

inline void add(Float3& a, const Float3& b) {
  a.x += b.x;
  a.y += b.y;
  a.z += b.z;
}

}  // namespace

void fold_x_guards(GridView j, int j0, int j1) {
  const int nx = j.nx();
  for (int r = j0; r < j1; ++r) {
    Float3* row = j.row(r);
    for (int g = -kGuardLo; g < 0; ++g) add(row[wrap(g, nx)], row[g]);
    for (int g = nx; g < nx + kGuardHi; ++g) add(row[wrap(g, nx)], row[g]);
  }
  refresh_x_guards(j, j0, j1);
}

void refresh_x_guards(GridView g, int j0, int j1) {
  const int nx = g.nx();
  for (int r = j0; r < j1; ++r) {
    Float3* row = g.row(r);
    for (int i = -kGuardLo; i < 0; ++i) row[i] = row[wrap(i, nx)];
    for (int i = nx; i < nx + kGuardHi; ++i) row[i] = row[wrap(i, nx)];
  }
}

// n passes of the (1/4, 1/2, 1/4) kernel have the transfer function
// cos^(2n)(k/2) = 1 - n k^2/4 + O(k^4). A 3-point kernel (a, b, a) with
// a + b + a = 1 has transfer 1 + 2a (cos k - 1) = 1 - a k^2 + O(k^4), so the
// product is flat to second order when a = -n/4, b = 1 + n/2.
CompensatorWeights compensator_weights(int n_passes) {
  const float n = static_cast<float>(n_passes);
  return {-0.25f * n, 1.0f + 0.5f * n};
}

void filter_current(GridView j, int j0, int j1, const FilterSpec& spec, bool x_periodic) {
  if (spec.kind == FilterKind::none) return;
  const int nx = j.nx();
  std::vector<Float3> tmp(static_cast<std::size_t>(nx) + 2);

  auto pass = [&](Float3* row, float side, float center) {
    // tmp[i+1] holds row[i] for i in [-1, nx]
    std::copy(row - 1, row + nx + 1, tmp.begin());
    for (int i = 0; i < nx; ++i) {
      const Float3& l = tmp[i];
      const Float3& c = tmp[i + 1];
      const Float3& r = tmp[i + 2];
      row[i].x = side * (l.x + r.x) + center * c.x;
      row[i].y = side * (l.y + r.y) + center * c.y;
      row[i].z = side * (l.z + r.z) + center * c.z;
    }
    if (x_periodic) {
      row[-1] = row[nx - 1];
      for (int g = nx; g < nx + kGuardHi; ++g) row[g] = row[wrap(g, nx)];
    }
  };

  for (int r = j0; r < j1; ++r) {
    Float3* row = j.row(r);
    for (int p = 0; p < spec.n_passes; ++p) pass(row, 0.25f, 0.5f);
    if (spec.kind == FilterKind::compensated) {
      const auto w = compensator_weights(spec.n_passes);
      pass(row, w.side, w.center);
    }
  }
}

void advance_b(GridView e, GridView b, float dt, float dx, float dy, int j0, int j1) {
  const float dt_dx = dt / dx;
  const float dt_dy = dt / dy;
  const int nx = e.nx();
  for (int j = j0; j < j1; ++j) {
    const Float3* e0 = e.row(j);
    const Float3* e1 = e.row(j + 1);
    Float3* br = b.row(j);
    for (int i = -1; i <= nx; ++i) {
      br[i].x += -dt_dy * (e1[i].z - e0[i].z);
      br[i].y += dt_dx * (e0[i + 1].z - e0[i].z);
      br[i].z += -dt_dx * (e0[i + 1].y - e0[i].y) + dt_dy * (e1[i].x - e0[i].x);
    }
  }
}

void advance_e(GridView e, GridView b, ConstGridView jc, float dt, float dx, float dy, int j0,
               int j1) {
  const float dt_dx = dt / dx;
  const float dt_dy = dt / dy;
  const int nx = e.nx();
  for (int j = j0; j < j1; ++j) {
    const Float3* b0 = b.row(j - 1);
    const Float3* b1 = b.row(j);
    const Float3* jr = jc.row(j);
    Float3* er = e.row(j);
    for (int i = 0; i <= nx + 1; ++i) {
      er[i].x += dt_dy * (b1[i].z - b0[i].z) - dt * jr[i].x;
      er[i].y += -dt_dx * (b1[i].z - b1[i - 1].z) - dt * jr[i].y;
      er[i].z += dt_dx * (b1[i].y - b1[i - 1].y) - dt_dy * (b1[i].x - b0[i].x) - dt * jr[i].z;
    }
  }
}

void yee_advance(EMFields& emf, ConstGridView j, float dt, float dx, float dy, bool x_periodic) {
  GridView e = emf.e.view();
  GridView b = emf.b.view();
  const int ny = e.ny();
  advance_b(e, b, 0.5f * dt, dx, dy, -1, ny + 1);
  advance_e(e, b, j, dt, dx, dy, 0, ny + kGuardHi);
  advance_b(e, b, 0.5f * dt, dx, dy, -1, ny + 1);
  if (x_periodic) {
    refresh_x_guards(e, -kGuardLo, ny + kGuardHi);
    refresh_x_guards(b, -kGuardLo, ny + kGuardHi);
  }
}

void refresh_periodic_guards(VecGrid& g, bool x_periodic) {
  const int ny = g.ny();
  GridView v = g.view();
  if (x_periodic) refresh_x_guards(v, 0, ny);
  const auto width = g.stride();
  auto copy_row = [&](int dst, int src) {
    std::copy(g.row(src) - g.gx_lo(), g.row(src) - g.gx_lo() + width, g.row(dst) - g.gx_lo());
  };
  for (int r = -g.gy_lo(); r < 0; ++r) copy_row(r, wrap(r, ny));
  for (int r = ny; r < ny + g.gy_hi(); ++r) copy_row(r, wrap(r, ny));
}

void shift_grid_left(VecGrid& g) {
  const int nx = g.nx();
  for (int r = -g.gy_lo(); r < g.ny() + g.gy_hi(); ++r) {
    Float3* row = g.row(r);
    std::copy(row, row + nx, row - 1);  // columns [-1, nx-2] <- [0, nx-1]
    std::fill(row + nx - 1, row + nx + g.gx_hi(), Float3{});
  }
}

}  // namespace pic
