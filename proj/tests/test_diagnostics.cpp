#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "pic/diagnostics.hpp"
#include "pic/kernels.hpp"

using namespace pic;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("taskpic_diag_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<unsigned char> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

SimConfig cold_config(int n_regions) {
  auto c = resolve_scenario("cold");
  const double dx = c.dx(), dy = c.dy();
  c.nx = 12;
  c.ny = 16;
  c.box_x = 12 * dx;
  c.box_y = 16 * dy;
  c.n_regions = n_regions;
  return c;
}

FieldReport ramp(int nx, int ny, Quantity q = Quantity::bz) {
  FieldReport r;
  r.quantity = q;
  r.iter = 3;
  r.nx = nx;
  r.ny = ny;
  for (int k = 0; k < nx * ny; ++k) r.data.push_back(std::sin(0.37f * k));
  return r;
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("quantity names round-trip") {
  for (auto q : {Quantity::ex, Quantity::ey, Quantity::ez, Quantity::bx, Quantity::by,
                 Quantity::bz, Quantity::jx, Quantity::jy, Quantity::jz}) {
    CHECK(parse_quantity(quantity_name(q)).first == q);
  }
  CHECK(quantity_name(Quantity::bz) == "Bz");
  CHECK(quantity_name(Quantity::charge, 1) == "rho1");
  CHECK(parse_quantity("rho1") == std::pair{Quantity::charge, 1});
  CHECK_THROWS_AS(parse_quantity("Qx"), std::invalid_argument);
}

TEST_CASE("zero fields dump to a header plus nx*ny zero floats") {
  auto s = make_state(cold_config(1));
  const auto dir = scratch("zero");
  const auto path = dump_path(dir.string(), Quantity::ex, 0);
  CHECK(fs::path(path).filename() == "Ex-0.zdump");
  const auto rep = dump_field(s, Quantity::ex, path);
  const auto bytes = file_bytes(path);
  REQUIRE(bytes.size() == 32 + 4u * 12 * 16);
  CHECK(std::memcmp(bytes.data(), "ZPICDUMP", 8) == 0);
  CHECK((bytes[8] | bytes[9] << 8) == kDumpVersion);
  CHECK((bytes[10] | bytes[11] << 8) == rep.code());
  CHECK((bytes[16] | bytes[17] << 8) == 12);
  CHECK((bytes[20] | bytes[21] << 8) == 16);
  for (std::size_t k = 24; k < bytes.size(); ++k) CHECK(bytes[k] == 0);
}

TEST_CASE("dump then load is the identity") {
  const auto rep = ramp(7, 5);
  const auto back = decode_dump(encode_dump(rep));
  CHECK(back.quantity == rep.quantity);
  CHECK(back.iter == rep.iter);
  CHECK(back.nx == 7);
  CHECK(back.ny == 5);
  CHECK(back.data == rep.data);

  const auto dir = scratch("roundtrip");
  const auto path = (dir / "x.zdump").string();
  FieldReport charge = ramp(4, 4, Quantity::charge);
  charge.species = 2;
  write_dump(charge, path);
  const auto loaded = read_dump(path);
  CHECK(loaded.quantity == Quantity::charge);
  CHECK(loaded.species == 2);
  CHECK(loaded.data == charge.data);
}

TEST_CASE("reading a missing or malformed dump raises IoError") {
  CHECK_THROWS_AS(read_dump("/nonexistent/dir/none.zdump"), IoError);
  std::vector<unsigned char> junk(40, 'x');
  CHECK_THROWS_AS(decode_dump(junk), IoError);
  auto good = encode_dump(ramp(3, 3));
  good.pop_back();
  CHECK_THROWS_AS(decode_dump(good), IoError);
  CHECK_THROWS_AS(write_dump(ramp(2, 2), "/nonexistent/dir/out.zdump"), IoError);
}

TEST_CASE("dumps of a force-free run are byte-identical across region counts") {
  const auto dir = scratch("stitch");
  std::vector<std::vector<unsigned char>> files;
  for (int n : {1, 4}) {
    auto s = make_state(cold_config(n));
    run_serial(s, 5);
    for (auto q : {Quantity::ex, Quantity::bz, Quantity::jy, Quantity::charge}) {
      const auto path = dir / (std::to_string(n) + quantity_name(q) + ".zdump");
      dump_field(s, q, path.string());
      files.push_back(file_bytes(path));
    }
  }
  for (std::size_t k = 0; k < 4; ++k) CHECK(files[k] == files[k + 4]);
}

TEST_CASE("stitched maps are independent of the region count for shared fields") {
  // Fields set from a global pattern must read back identically.
  for (int n : {1, 2, 4}) {
    auto s = make_state(cold_config(n));
    for (auto& r : s.regions)
      for (int j = 0; j < r.n_rows; ++j)
        for (int i = 0; i < 12; ++i) r.emf.b(i, j).z = static_cast<float>(100 * (r.y0 + j) + i);
    const auto rep = field_report(s, Quantity::bz);
    for (int j = 0; j < 16; ++j)
      for (int i = 0; i < 12; ++i) CHECK(rep.at(i, j) == static_cast<float>(100 * j + i));
  }
}

TEST_CASE("charge density of a uniform cold plasma equals its density") {
  auto s = make_state(cold_config(2));
  const auto rho = field_report(s, Quantity::charge, 0);
  const float expect = std::copysign(s.cfg.species[0].density, s.cfg.species[0].m_q);
  for (float v : rho.data) CHECK(v == doctest::Approx(expect));
}

TEST_CASE("comparing a map with itself gives zero") {
  const auto a = ramp(9, 9);
  const auto d = compare_field_maps(a, a);
  CHECK(d.max_rel == 0.0);
  CHECK(d.l2_rel == 0.0);
}

TEST_CASE("one cell perturbed by 1% of the peak gives max relative error 0.01") {
  auto a = ramp(9, 9);
  float peak = 0;
  for (float v : a.data) peak = std::max(peak, std::fabs(v));
  auto b = a;
  b.data[17] += 0.01f * peak;
  CHECK(compare_field_maps(a, b).max_rel == doctest::Approx(0.01).epsilon(1e-4));
  // Symmetric up to the reference normalization.
  CHECK(compare_field_maps(b, a).max_rel == doctest::Approx(0.01).epsilon(0.02));
}

TEST_CASE("comparing different shapes or quantities raises ShapeMismatch") {
  CHECK_THROWS_AS(compare_field_maps(ramp(4, 4), ramp(4, 5)), ShapeMismatch);
  CHECK_THROWS_AS(compare_field_maps(ramp(4, 4), ramp(4, 4, Quantity::bx)), ShapeMismatch);
}

TEST_CASE("cold static plasma has zero field and kinetic energy") {
  auto s = make_state(cold_config(2));
  for (int k = 0; k < 5; ++k) {
    run_serial(s, 1);
    const auto e = energy_report(s);
    CHECK(e.field_energy == 0.0);
    CHECK(e.kinetic_energy == 0.0);
    CHECK(e.iter == s.iter);
  }
}

TEST_CASE("vacuum plane wave keeps its field energy over 500 steps") {
  SimConfig c;
  c.nx = 32;
  c.ny = 8;
  c.box_x = 3.2;
  c.box_y = 0.8;
  c.dt = 0.06;
  c.n_steps = 500;
  auto s = make_state(c, 2);
  const double k = 2 * 3.141592653589793 / c.box_x;
  // Standing-free travelling wave: Ey and Bz in phase, Bz half a cell ahead.
  const double w = 2 / c.dt * std::asin(c.dt / c.dx() * std::sin(0.5 * k * c.dx()));
  for (auto& r : s.regions)
    for (int j = -1; j < r.n_rows + 2; ++j)
      for (int i = -1; i < c.nx + 2; ++i) {
        r.emf.e(i, j).y = static_cast<float>(std::cos(k * i * c.dx()));
        r.emf.b(i, j).z =
            static_cast<float>(std::cos(0.5 * w * c.dt) * std::cos(k * (i + 0.5) * c.dx()));
      }
  const double w0 = energy_report(s).field_energy;
  CHECK(w0 > 0);
  double drift = 0;
  for (int n = 0; n < 500; ++n) {
    run_serial(s, 1);
    drift = std::max(drift, std::fabs(energy_report(s).field_energy - w0) / w0);
  }
  CHECK(drift <= 1e-5);
}

TEST_CASE("energy series appends one JSON object per report") {
  auto s = make_state(cold_config(1));
  const auto dir = scratch("energy");
  const auto path = (dir / "energy.ndjson").string();
  EnergySeries series(path);
  for (int k = 0; k < 3; ++k) {
    run_serial(s, 1);
    series.append(energy_report(s));
  }
  std::ifstream in(path);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto obj = nlohmann::json::parse(line);
    CHECK(obj["iter"] == n + 1);
    CHECK(obj.contains("field_energy"));
    CHECK(obj.contains("kinetic_energy"));
    CHECK(obj["species"].size() == 1);
    ++n;
  }
  CHECK(n == 3);
}

TEST_CASE("energies are finite and non-negative for a warm run") {
  auto c = resolve_scenario("warm");
  const double dx = c.dx(), dy = c.dy();
  c.nx = 16;
  c.ny = 16;
  c.box_x = 16 * dx;
  c.box_y = 16 * dy;
  auto s = make_state(c, 2);
  for (int k = 0; k < 10; ++k) {
    run_serial(s, 1);
    const auto e = energy_report(s);
    CHECK(std::isfinite(e.field_energy));
    CHECK(e.field_energy >= 0);
    CHECK(e.kinetic_energy > 0);
    CHECK(e.electric_energy + e.magnetic_energy == doctest::Approx(e.field_energy));
  }
}

}  // TEST_SUITE
