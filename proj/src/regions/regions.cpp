#include <algorithm>
#include <string>

#include "pic/regions.hpp"

namespace pic {

namespace {

void copy_row(VecGrid& dst, int dst_row, const VecGrid& src, int src_row) {
  const Float3* s = src.row(src_row) - src.gx_lo();
  std::copy(s, s + src.stride(), dst.row(dst_row) - dst.gx_lo());
}

void add_row(VecGrid& dst, int dst_row, const VecGrid& src, int src_row) {
  const Float3* s = src.row(src_row) - src.gx_lo();
  Float3* d = dst.row(dst_row) - dst.gx_lo();
  for (std::ptrdiff_t i = 0; i < src.stride(); ++i) {
    d[i].x += s[i].x;
    d[i].y += s[i].y;
    d[i].z += s[i].z;
  }
}

// Guard rows of `dst` from the rows of its ring neighbors.
void fill_guards(VecGrid& dst, const VecGrid& lower, const VecGrid& upper) {
  copy_row(dst, -1, lower, lower.ny() - 1);
  copy_row(dst, dst.ny(), upper, 0);
  copy_row(dst, dst.ny() + 1, upper, 1);
}

}  // namespace

std::size_t Region::particle_count() const {
  std::size_t n = 0;
  for (const auto& s : species) n += s.parts.size();
  return n;
}

std::vector<RowBand> partition_rows(int ny, int n_regions) {
  std::vector<RowBand> bands;
  bands.reserve(n_regions);
  const int base = ny / n_regions;
  const int extra = ny % n_regions;
  int y = 0;
  for (int r = 0; r < n_regions; ++r) {
    const int h = base + (r < extra ? 1 : 0);
    bands.push_back({y, h});
    y += h;
  }
  return bands;
}

std::vector<Region> partition(const SimConfig& cfg) {
  validate_config(cfg);
  const auto bands = partition_rows(cfg.ny, cfg.n_regions);
  if (bands.back().n_rows < kMinRegionRows) {
    throw ConfigError(ConfigError::Code::region_too_thin, "n_regions",
                      "n_regions: " + std::to_string(cfg.n_regions) + " regions over " +
                          std::to_string(cfg.ny) + " rows leaves bands thinner than " +
                          std::to_string(kMinRegionRows) + " rows");
  }

  std::vector<Region> regions(bands.size());
  for (std::size_t r = 0; r < bands.size(); ++r) {
    Region& reg = regions[r];
    reg.id = static_cast<int>(r);
    reg.y0 = bands[r].y0;
    reg.n_rows = bands[r].n_rows;
    reg.emf = EMFields(cfg.nx, reg.n_rows);
    reg.j_local = CurrentDensity(cfg.nx, reg.n_rows);
    reg.species.resize(cfg.species.size());
    for (std::size_t s = 0; s < cfg.species.size(); ++s) {
      InjectionBlock block;
      block.ncols = cfg.nx;
      block.row0 = reg.y0;
      block.nrows = reg.n_rows;
      block.local_row0 = reg.y0;
      inject_block(cfg.species[s], s, cfg.seed, block, reg.species[s].parts);
    }
    if (cfg.laser) init_laser(reg.emf, *cfg.laser, cfg);
  }
  return regions;
}

void migrate_particles(Region& r, Region& lower, Region& upper) {
  for (std::size_t s = 0; s < r.species.size(); ++s) {
    auto& dst = r.species[s].parts;
    auto& from_lower = lower.species[s].out_hi;
    auto& from_upper = upper.species[s].out_lo;
    for (Particle p : from_lower) {
      if (p.iy != lower.n_rows) {
        throw MigrationOverflow("particle staged by region " + std::to_string(lower.id) +
                                " at row " + std::to_string(p.iy) + " skips past region " +
                                std::to_string(r.id));
      }
      p.iy = 0;
      dst.push_back(p);
    }
    for (Particle p : from_upper) {
      if (p.iy != -1) {
        throw MigrationOverflow("particle staged by region " + std::to_string(upper.id) +
                                " at row " + std::to_string(p.iy) + " skips past region " +
                                std::to_string(r.id));
      }
      p.iy = r.n_rows - 1;
      dst.push_back(p);
    }
    from_lower.clear();
    from_upper.clear();
  }
}

void reduce_ghost_current(Region& r, const Region& lower, const Region& upper) {
  VecGrid& j = r.j_local.j;
  const VecGrid& jl = lower.j_local.j;
  const VecGrid& ju = upper.j_local.j;
  add_row(j, 0, jl, jl.ny());
  add_row(j, 1, jl, jl.ny() + 1);
  add_row(j, j.ny() - 1, ju, -1);
}

void fill_current_guards(Region& r, const Region& lower, const Region& upper) {
  fill_guards(r.j_local.j, lower.j_local.j, upper.j_local.j);
}

void exchange_ghost_fields(Region& r, const Region& lower, const Region& upper) {
  fill_guards(r.emf.e, lower.emf.e, upper.emf.e);
  fill_guards(r.emf.b, lower.emf.b, upper.emf.b);
}

}  // namespace pic
