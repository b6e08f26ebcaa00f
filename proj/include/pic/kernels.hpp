#pragma once

// The four PIC stages (field interpolation, particle push, current deposit,
// field advance) plus current filtering and the moving-window shift. All
// functions mutate only the buffers passed to them; deposits into shared
// buffers are not synchronized here.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "pic/core.hpp"
#include "pic/grid.hpp"

namespace pic {

struct InterpolatedField {
  Float3 ep;
  Float3 bp;
};

// Bilinear interpolation of each component at its own staggered location.
// Reaches one cell below and one cell above the particle cell.
inline InterpolatedField interpolate_emf(ConstGridView e, ConstGridView b, const Particle& p) {
  const int i = p.ix;
  const int j = p.iy;
  const float w1 = p.x;
  const float w2 = p.y;

  // Offsets for half-integer (staggered) positions.
  const int ih = p.x < 0.5f ? -1 : 0;
  const float w1h = p.x + (p.x < 0.5f ? 0.5f : -0.5f);
  const int jh = p.y < 0.5f ? -1 : 0;
  const float w2h = p.y + (p.y < 0.5f ? 0.5f : -0.5f);

  InterpolatedField f;
  // Ex (i+1/2, j)
  f.ep.x = (e(i + ih, j).x * (1 - w1h) + e(i + ih + 1, j).x * w1h) * (1 - w2) +
           (e(i + ih, j + 1).x * (1 - w1h) + e(i + ih + 1, j + 1).x * w1h) * w2;
  // Ey (i, j+1/2)
  f.ep.y = (e(i, j + jh).y * (1 - w1) + e(i + 1, j + jh).y * w1) * (1 - w2h) +
           (e(i, j + jh + 1).y * (1 - w1) + e(i + 1, j + jh + 1).y * w1) * w2h;
  // Ez (i, j)
  f.ep.z = (e(i, j).z * (1 - w1) + e(i + 1, j).z * w1) * (1 - w2) +
           (e(i, j + 1).z * (1 - w1) + e(i + 1, j + 1).z * w1) * w2;

  // Bx (i, j+1/2)
  f.bp.x = (b(i, j + jh).x * (1 - w1) + b(i + 1, j + jh).x * w1) * (1 - w2h) +
           (b(i, j + jh + 1).x * (1 - w1) + b(i + 1, j + jh + 1).x * w1) * w2h;
  // By (i+1/2, j)
  f.bp.y = (b(i + ih, j).y * (1 - w1h) + b(i + ih + 1, j).y * w1h) * (1 - w2) +
           (b(i + ih, j + 1).y * (1 - w1h) + b(i + ih + 1, j + 1).y * w1h) * w2;
  // Bz (i+1/2, j+1/2)
  f.bp.z = (b(i + ih, j + jh).z * (1 - w1h) + b(i + ih + 1, j + jh).z * w1h) * (1 - w2h) +
           (b(i + ih, j + jh + 1).z * (1 - w1h) + b(i + ih + 1, j + jh + 1).z * w1h) * w2h;
  return f;
}

// Returns -1, 0 or +1 depending on which side of [0,1) x lies.
inline int cell_shift(float x) { return x < 0.0f ? -1 : (x >= 1.0f ? 1 : 0); }

// Relativistic Boris push followed by the position update. The returned
// particle's cell index may differ from p's by at most one per axis and is
// not wrapped; offsets are renormalized to [0,1).
inline Particle boris_advance(const Particle& p, const InterpolatedField& f, float m_q, float dt,
                              float dx, float dy) {
  const float tem = 0.5f * dt / m_q;

  // First half electric kick.
  const float epx = f.ep.x * tem;
  const float epy = f.ep.y * tem;
  const float epz = f.ep.z * tem;
  float utx = p.ux + epx;
  float uty = p.uy + epy;
  float utz = p.uz + epz;

  // Magnetic rotation with gamma from the half-kicked momentum.
  const float gtem = tem / std::sqrt(1.0f + utx * utx + uty * uty + utz * utz);
  float bx = f.bp.x * gtem;
  float by = f.bp.y * gtem;
  float bz = f.bp.z * gtem;

  float ux = utx + uty * bz - utz * by;
  float uy = uty + utz * bx - utx * bz;
  float uz = utz + utx * by - uty * bx;

  const float otsq = 2.0f / (1.0f + bx * bx + by * by + bz * bz);
  bx *= otsq;
  by *= otsq;
  bz *= otsq;

  utx += uy * bz - uz * by;
  uty += uz * bx - ux * bz;
  utz += ux * by - uy * bx;

  // Second half electric kick.
  Particle q = p;
  q.ux = utx + epx;
  q.uy = uty + epy;
  q.uz = utz + epz;

  const float rg = 1.0f / std::sqrt(1.0f + q.ux * q.ux + q.uy * q.uy + q.uz * q.uz);
  const float x1 = p.x + (dt / dx) * rg * q.ux;
  const float y1 = p.y + (dt / dy) * rg * q.uy;

  const int di = cell_shift(x1);
  const int dj = cell_shift(y1);
  q.ix = p.ix + di;
  q.iy = p.iy + dj;
  q.x = x1 - static_cast<float>(di);
  q.y = y1 - static_cast<float>(dj);
  // x1 = -tiny rounds to exactly 1 after the shift; keep the offset in [0,1).
  if (q.x >= 1.0f) q.x = std::nextafter(1.0f, 0.0f);
  if (q.y >= 1.0f) q.y = std::nextafter(1.0f, 0.0f);
  return q;
}

namespace detail {

struct Segment {
  int ix, iy;
  float x0, y0, x1, y1;  // cell-local end points
  float frac;            // fraction of the time step spent on this segment
};

inline void deposit_segment(const Segment& s, float qnx, float qny, float qvz, GridView j) {
  const float dxs = s.x1 - s.x0;
  const float dys = s.y1 - s.y0;
  const float xm = 0.5f * (s.x0 + s.x1);
  const float ym = 0.5f * (s.y0 + s.y1);

  const float wl1 = qnx * dxs;
  const float wl2 = qny * dys;

  j(s.ix, s.iy).x += wl1 * (1.0f - ym);
  j(s.ix, s.iy + 1).x += wl1 * ym;

  j(s.ix, s.iy).y += wl2 * (1.0f - xm);
  j(s.ix + 1, s.iy).y += wl2 * xm;

  // z current uses the bilinear weights at the segment midpoint.
  const float vz = qvz * s.frac;
  j(s.ix, s.iy).z += vz * (1.0f - xm) * (1.0f - ym);
  j(s.ix + 1, s.iy).z += vz * xm * (1.0f - ym);
  j(s.ix, s.iy + 1).z += vz * (1.0f - xm) * ym;
  j(s.ix + 1, s.iy + 1).z += vz * xm * ym;
}

}  // namespace detail

// Charge-conserving deposit of the current generated by moving a particle
// from p_old to p_new (at most one cell crossing per axis). The straight
// trajectory is split at cell boundaries into up to three segments, each
// depositing inside a single cell. qvz = q * uz / gamma of p_new.
inline void deposit_current(const Particle& p_old, const Particle& p_new, float q, float qvz,
                            GridView j, float dt, float dx, float dy) {
  const float qnx = q * dx / dt;
  const float qny = q * dy / dt;

  const int di = p_new.ix - p_old.ix;
  const int dj = p_new.iy - p_old.iy;

  if (di == 0 && dj == 0) {
    detail::deposit_segment({p_old.ix, p_old.iy, p_old.x, p_old.y, p_new.x, p_new.y, 1.0f}, qnx,
                            qny, qvz, j);
    return;
  }

  // Displacement measured in the frame of the starting cell.
  const float dxt = (p_new.x + static_cast<float>(di)) - p_old.x;
  const float dyt = (p_new.y + static_cast<float>(dj)) - p_old.y;
  const float xb = di > 0 ? 1.0f : 0.0f;  // boundary crossed in x (start frame)
  const float yb = dj > 0 ? 1.0f : 0.0f;

  if (dj == 0) {
    const float tx = (xb - p_old.x) / dxt;
    const float yc = p_old.y + dyt * tx;
    detail::deposit_segment({p_old.ix, p_old.iy, p_old.x, p_old.y, xb, yc, tx}, qnx, qny, qvz, j);
    detail::deposit_segment({p_new.ix, p_old.iy, 1.0f - xb, yc, p_new.x, p_new.y, 1.0f - tx},
                            qnx, qny, qvz, j);
    return;
  }
  if (di == 0) {
    const float ty = (yb - p_old.y) / dyt;
    const float xc = p_old.x + dxt * ty;
    detail::deposit_segment({p_old.ix, p_old.iy, p_old.x, p_old.y, xc, yb, ty}, qnx, qny, qvz, j);
    detail::deposit_segment({p_old.ix, p_new.iy, xc, 1.0f - yb, p_new.x, p_new.y, 1.0f - ty},
                            qnx, qny, qvz, j);
    return;
  }

  // Both axes crossed: three segments, ordered by crossing time.
  const float tx = (xb - p_old.x) / dxt;
  const float ty = (yb - p_old.y) / dyt;
  if (tx <= ty) {
    const float yc = p_old.y + dyt * tx;                              // start-cell y frame
    const float xc = p_old.x + dxt * ty - static_cast<float>(di);   // new-column x frame
    detail::deposit_segment({p_old.ix, p_old.iy, p_old.x, p_old.y, xb, yc, tx}, qnx, qny, qvz, j);
    detail::deposit_segment({p_new.ix, p_old.iy, 1.0f - xb, yc, xc, yb, ty - tx}, qnx, qny, qvz,
                            j);
    detail::deposit_segment({p_new.ix, p_new.iy, xc, 1.0f - yb, p_new.x, p_new.y, 1.0f - ty},
                            qnx, qny, qvz, j);
  } else {
    const float xc = p_old.x + dxt * ty;                              // start-cell x frame
    const float yc = p_old.y + dyt * tx - static_cast<float>(dj);   // new-row y frame
    detail::deposit_segment({p_old.ix, p_old.iy, p_old.x, p_old.y, xc, yb, ty}, qnx, qny, qvz, j);
    detail::deposit_segment({p_old.ix, p_new.iy, xc, 1.0f - yb, xb, yc, tx - ty}, qnx, qny, qvz,
                            j);
    detail::deposit_segment({p_new.ix, p_new.iy, 1.0f - xb, yc, p_new.x, p_new.y, 1.0f - tx},
                            qnx, qny, qvz, j);
  }
}

// Convenience overload computing qvz from p_new's momentum.
inline void deposit_current(const Particle& p_old, const Particle& p_new, float q, GridView j,
                            float dt, float dx, float dy) {
  const float rg = 1.0f / std::sqrt(1.0f + p_new.ux * p_new.ux + p_new.uy * p_new.uy +
                                    p_new.uz * p_new.uz);
  deposit_current(p_old, p_new, q, q * p_new.uz * rg, j, dt, dx, dy);
}

// ---------------------------------------------------------------------------
// Particle loop

inline constexpr std::int32_t kRemovedCell = std::numeric_limits<std::int32_t>::min();

struct PushBounds {
  int nx = 0;
  int n_rows = 0;
  bool x_periodic = true;  // otherwise particles leaving in x are removed
  bool y_wrap = true;      // otherwise particles leaving in y are staged
};

struct PushStaging {
  std::vector<Particle>* out_lo = nullptr;  // crossed below row 0
  std::vector<Particle>* out_hi = nullptr;  // crossed above row n_rows-1
};

struct PushParams {
  SpeciesConstants sp;
  float dt = 0;
  float dx = 0;
  float dy = 0;
};

// Interpolate, push and deposit particles [begin, end) in place. Particles
// that leave the region are either wrapped, copied to staging (and marked
// with ix = kRemovedCell), or marked removed. Returns the number marked.
std::size_t push_particles(std::vector<Particle>& parts, std::size_t begin, std::size_t end,
                           ConstGridView e, ConstGridView b, GridView j, const PushParams& prm,
                           const PushBounds& bounds, const PushStaging& staging);

// Drops particles marked with kRemovedCell, preserving the order of the rest.
void compact_particles(std::vector<Particle>& parts);

// ---------------------------------------------------------------------------
// Current post-processing

// Adds x guard-cell deposits into the periodic interior image and refreshes
// the guards with copies of the interior (rows [j0, j1)).
void fold_x_guards(GridView j, int j0, int j1);

// Copies periodic interior columns into x guard cells for rows [j0, j1).
void refresh_x_guards(GridView g, int j0, int j1);

// Compensator weights (side, center) for n binomial passes.
struct CompensatorWeights {
  float side;
  float center;
};
CompensatorWeights compensator_weights(int n_passes);

// Filters rows [j0, j1) along x. Guard columns -1 and nx must hold valid
// neighbor values; with x_periodic they are refreshed between passes.
void filter_current(GridView j, int j0, int j1, const FilterSpec& spec, bool x_periodic);

// ---------------------------------------------------------------------------
// Yee solver

// B += -dt curl E over rows [j0, j1) and columns [-1, nx].
void advance_b(GridView e, GridView b, float dt, float dx, float dy, int j0, int j1);
// E += dt (curl B - J) over rows [j0, j1) and columns [0, nx+1]. J must
// hold valid guard values on that range.
void advance_e(GridView e, GridView b, ConstGridView j, float dt, float dx, float dy, int j0,
               int j1);

// Full leapfrog step: B half step, E full step, B half step. Interior cells
// end up exact given valid E, B and J guards on entry; E and B guard cells
// must be refreshed afterwards by the caller (ghost exchange). x guards are
// refreshed here when x_periodic.
void yee_advance(EMFields& emf, ConstGridView j, float dt, float dx, float dy, bool x_periodic);

// Whole-grid periodic guard refresh in both axes (single-domain grids).
void refresh_periodic_guards(VecGrid& g, bool x_periodic);

// ---------------------------------------------------------------------------
// Moving window

// Shifts every stored row one cell towards -x and zeroes the columns entering
// at the +x edge.
void shift_grid_left(VecGrid& g);

// Decrements every particle's ix and drops particles leaving x < 0.
void shift_particles_left(std::vector<Particle>& parts);

}  // namespace pic
