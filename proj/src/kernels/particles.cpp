#include <algorithm>

#include "pic/kernels.hpp"

namespace pic {

std::size_t push_particles(std::vector<Particle>& parts, std::size_t begin, std::size_t end,
                           ConstGridView e, ConstGridView b, GridView j, const PushParams& prm,
                           const PushBounds& bounds, const PushStaging& staging) {
  const float q = prm.sp.q;
  const float m_q = prm.sp.m_q;
  std::size_t marked = 0;

  for (std::size_t k = begin; k < end; ++k) {
    const Particle old = parts[k];
    const InterpolatedField f = interpolate_emf(e, b, old);
    Particle p = boris_advance(old, f, m_q, prm.dt, prm.dx, prm.dy);

    const float rg = 1.0f / std::sqrt(1.0f + p.ux * p.ux + p.uy * p.uy + p.uz * p.uz);
    deposit_current(old, p, q, q * p.uz * rg, j, prm.dt, prm.dx, prm.dy);

    if (p.ix < 0 || p.ix >= bounds.nx) {
      if (bounds.x_periodic) {
        p.ix += p.ix < 0 ? bounds.nx : -bounds.nx;
      } else {
        p.ix = kRemovedCell;
        parts[k] = p;
        ++marked;
        continue;
      }
    }
    if (p.iy < 0 || p.iy >= bounds.n_rows) {
      if (bounds.y_wrap) {
        p.iy += p.iy < 0 ? bounds.n_rows : -bounds.n_rows;
      } else {
        (p.iy < 0 ? staging.out_lo : staging.out_hi)->push_back(p);
        p.ix = kRemovedCell;
        ++marked;
      }
    }
    parts[k] = p;
  }
  return marked;
}

void compact_particles(std::vector<Particle>& parts) {
  std::erase_if(parts, [](const Particle& p) { return p.ix == kRemovedCell; });
}

void shift_particles_left(std::vector<Particle>& parts) {
  for (auto& p : parts) {
    p.ix -= 1;
    if (p.ix < 0) p.ix = kRemovedCell;
  }
  compact_particles(parts);
}

}  // namespace pic
