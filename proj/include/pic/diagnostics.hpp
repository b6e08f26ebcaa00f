#pragma once

// Field maps, dump files, map comparison and energy reporting.
//
// Dump file layout (little endian):
//   0   char[8]  "ZPICDUMP"
//   8   u16      format version (1)
//   10  u16      quantity code
//   12  u32      iter
//   16  u32      nx
//   20  u32      ny
//   24  u8[8]    reserved, zero
//   32  f32[nx*ny] row-major, row 0 first

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pic/backends.hpp"

namespace pic {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Quantity { ex, ey, ez, bx, by, bz, jx, jy, jz, charge };

inline constexpr std::uint16_t kDumpVersion = 1;
inline constexpr std::uint16_t kChargeCodeBase = 16;

struct FieldReport {
  Quantity quantity = Quantity::ex;
  int species = 0;  // charge density only
  int iter = 0;
  int nx = 0;
  int ny = 0;
  std::vector<float> data;  // nx*ny, row-major

  std::uint16_t code() const;
  float at(int i, int j) const { return data[static_cast<std::size_t>(j) * nx + i]; }
};

// "Ex".."Jz", or "rho<k>" for the charge density of species k.
std::string quantity_name(Quantity q, int species = 0);
// Inverse of quantity_name; throws std::invalid_argument.
std::pair<Quantity, int> parse_quantity(std::string_view name);

// Interior values stitched over regions in y order. iter < 0 uses state.iter.
FieldReport field_report(const SimState& state, Quantity q, int species = 0, int iter = -1);

void write_dump(const FieldReport& report, const std::string& path);
FieldReport read_dump(const std::string& path);
std::vector<unsigned char> encode_dump(const FieldReport& report);
FieldReport decode_dump(const std::vector<unsigned char>& bytes);

// field_report + write_dump.
FieldReport dump_field(const SimState& state, Quantity q, const std::string& path, int species = 0,
                       int iter = -1);

// "<dir>/<quantity>-<iter>.zdump"
std::string dump_path(const std::string& dir, Quantity q, int iter, int species = 0);

struct MapDifference {
  double max_rel = 0;  // max |a-b| / max(max|a|, eps)
  double l2_rel = 0;   // ||a-b||_2 / max(||a||_2, eps)
};

// a is the reference map. Throws ShapeMismatch on differing quantity or size.
MapDifference compare_field_maps(const FieldReport& a, const FieldReport& b);

struct SpeciesEnergy {
  std::string name;
  double kinetic = 0;
};

struct EnergyReport {
  int iter = 0;
  double field_energy = 0;    // sum (E^2 + B^2)/2 dx dy
  double electric_energy = 0;
  double magnetic_energy = 0;
  double kinetic_energy = 0;  // sum m (gamma - 1) dx dy
  std::vector<SpeciesEnergy> species;
};

EnergyReport energy_report(const SimState& state, int iter = -1);
std::string energy_to_json(const EnergyReport& e);

// Appends one NDJSON object per report.
class EnergySeries {
 public:
  explicit EnergySeries(const std::string& path);
  void append(const EnergyReport& e);

 private:
  std::string path_;
};

}  // namespace pic
