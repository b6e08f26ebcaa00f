#pragma once

// Row-band decomposition of the grid along y. Regions form a periodic ring;
// each owns n_rows grid rows (plus guard rows) and the particles whose cell
// lies in those rows, stored with region-local iy.

#include <stdexcept>
#include <vector>

#include "pic/core.hpp"
#include "pic/grid.hpp"

namespace pic {

class MigrationOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SpeciesBuffer {
  std::vector<Particle> parts;
  std::vector<Particle> out_lo;  // crossed below row 0 (iy == -1)
  std::vector<Particle> out_hi;  // crossed above the last row (iy == n_rows)
};

struct Region {
  int id = 0;
  int y0 = 0;
  int n_rows = 0;
  EMFields emf;
  CurrentDensity j_local;
  std::vector<SpeciesBuffer> species;

  std::size_t particle_count() const;
};

struct RowBand {
  int y0;
  int n_rows;
};

// Balanced split: the first ny % n bands get one extra row.
std::vector<RowBand> partition_rows(int ny, int n_regions);

inline constexpr int kMinRegionRows = 2;

// Builds cfg.n_regions regions with injected particles and the initial laser
// field. Throws ConfigError(region_too_thin) if a band is below
// kMinRegionRows.
std::vector<Region> partition(const SimConfig& cfg);

inline int lower_neighbor(int r, int n) { return (r + n - 1) % n; }
inline int upper_neighbor(int r, int n) { return (r + 1) % n; }

// Moves the particles staged for r by its neighbors (lower.out_hi and
// upper.out_lo, for every species) into r, re-localizing iy, and empties
// those staging buffers. Throws MigrationOverflow if a staged particle is not
// exactly one row past the neighbor's edge.
void migrate_particles(Region& r, Region& lower, Region& upper);

// Adds the neighbors' guard-row deposits overlapping r's owned rows: rows 0
// and 1 receive lower's rows n, n+1; row n_rows-1 receives upper's row -1.
// Full row width, x guard columns included.
void reduce_ghost_current(Region& r, const Region& lower, const Region& upper);

// Copies the neighbors' current into r's y guard rows (after reduction and
// filtering) so the field advance can compute guard cells redundantly.
void fill_current_guards(Region& r, const Region& lower, const Region& upper);

// Copies the neighbors' E and B boundary rows into r's y guard rows.
void exchange_ghost_fields(Region& r, const Region& lower, const Region& upper);

}  // namespace pic
