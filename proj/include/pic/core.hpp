#pragma once

// Domain types, configuration and scenario construction for the 2D3V EM-PIC
// simulator. Normalized units throughout: time in 1/wp, length in c/wp,
// momentum in m c, c = 1.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pic/grid.hpp"

namespace pic {

using Vec3 = std::array<float, 3>;

enum class FilterKind { none, binomial, compensated };

struct FilterSpec {
  FilterKind kind = FilterKind::none;
  int n_passes = 0;
};

struct SpeciesSpec {
  std::string name;
  float m_q = -1.0f;  // mass-to-charge ratio, -1 for electrons
  int ppc_x = 1;
  int ppc_y = 1;
  Vec3 u_fl{0, 0, 0};
  Vec3 u_th{0, 0, 0};
  float density = 1.0f;
};

// Longitudinal envelope: sin^2 rise, flat top, sin^2 fall, ending at start_x
// (the leading edge). A nonzero fwhm overrides rise/flat/fall with
// rise = fall = fwhm, flat = 0.
struct LaserSpec {
  float a0 = 0.0f;
  float omega0 = 0.0f;
  float fwhm = 0.0f;
  float rise = 0.0f;
  float flat = 0.0f;
  float fall = 0.0f;
  float polarization = 0.0f;  // angle of E from the y axis (radians)
  float start_x = 0.0f;

  float total_length() const;
  float rise_length() const { return fwhm > 0 ? fwhm : rise; }
  float flat_length() const { return fwhm > 0 ? 0.0f : flat; }
  float fall_length() const { return fwhm > 0 ? fwhm : fall; }
};

struct SimConfig {
  int nx = 0;
  int ny = 0;
  double box_x = 0;
  double box_y = 0;
  double dt = 0;
  int n_steps = 0;
  int n_regions = 1;
  std::uint64_t seed = 0;
  FilterSpec filter{};
  bool moving_window = false;
  std::vector<SpeciesSpec> species;
  std::optional<LaserSpec> laser;

  double dx() const { return box_x / nx; }
  double dy() const { return box_y / ny; }
  // Largest stable time step of the 2D Yee scheme (exclusive bound).
  double cfl_limit() const;
};

// Configuration and scenario errors. Each carries a code and the name of the
// offending field.
class ConfigError : public std::runtime_error {
 public:
  enum class Code {
    cfl_violation,
    empty_grid,
    region_count_exceeds_rows,
    invalid_value,
    unknown_key,
    parse_error,
    laser_wider_than_box,
    region_too_thin,
  };

  ConfigError(Code code, std::string field, const std::string& what)
      : std::runtime_error(what), code_(code), field_(std::move(field)) {}

  Code code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  Code code_;
  std::string field_;
};

// Returns cfg unchanged when all invariants hold, throws ConfigError otherwise.
const SimConfig& validate_config(const SimConfig& cfg);

// Macro-particle: owner cell plus in-cell offset in [0,1) and proper momentum.
struct Particle {
  std::int32_t ix = 0;
  std::int32_t iy = 0;
  float x = 0;
  float y = 0;
  float ux = 0;
  float uy = 0;
  float uz = 0;
};

// Per-species constants derived from the species description and the grid.
struct SpeciesConstants {
  float m_q = -1.0f;
  float q = -1.0f;  // charge per macro-particle (density weighted)
};

SpeciesConstants species_constants(const SpeciesSpec& spec);

// Counter-based random stream: the value for a given (key, counter) pair does
// not depend on how many other values were drawn before it.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t bits(std::uint64_t counter) const;
  // Uniform in (0, 1].
  double uniform(std::uint64_t counter) const;

  static std::uint64_t mix(std::uint64_t x);

 private:
  std::uint64_t key_;
};

// Injection of one species over the cell block [col0, col0+ncols) x
// [row0, row0+nrows). Cell indices of the produced particles are relative to
// (col0 - local_col0, row0 - local_row0); abs_col_offset shifts the column
// used to key the random stream so that moving-window injection draws values
// as a pure function of absolute position.
struct InjectionBlock {
  int col0 = 0;
  int ncols = 0;
  int row0 = 0;
  int nrows = 0;
  int local_col0 = 0;
  int local_row0 = 0;
  std::int64_t abs_col_offset = 0;
};

void inject_block(const SpeciesSpec& spec, std::size_t species_index, std::uint64_t seed,
                  const InjectionBlock& block, std::vector<Particle>& out);

// Whole-grid injection: nx*ny*ppc_x*ppc_y particles, rows outer, columns
// inner, sub-lattice innermost.
std::vector<Particle> inject_uniform(const SpeciesSpec& spec, std::size_t species_index,
                                     const SimConfig& cfg);

// Laser envelope value in [0,1] at longitudinal position x.
float laser_envelope(const LaserSpec& laser, double x);

// Adds a plane-wave laser pulse propagating in +x to zero-initialized fields.
void init_laser(EMFields& emf, const LaserSpec& laser, const SimConfig& cfg);

// Scenario files: JSON documents with keys equal to SimConfig field names.
SimConfig parse_config(std::string_view json_text);
SimConfig load_config(const std::string& path);
std::string config_to_json(const SimConfig& cfg);

// Built-in scenarios shipped with the library (weibel-small, lwfa-small,
// cold, warm and their full-scale counterparts).
std::vector<std::string> builtin_scenario_names();
std::optional<std::string> builtin_scenario_json(std::string_view name);

// Resolves a built-in name or a file path.
SimConfig resolve_scenario(const std::string& name_or_path);

}  // namespace pic
