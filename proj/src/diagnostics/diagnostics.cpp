#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "pic/diagnostics.hpp"

namespace pic {

namespace {

constexpr char kMagic[8] = {'Z', 'P', 'I', 'C', 'D', 'U', 'M', 'P'};
constexpr std::size_t kHeaderBytes = 32;
constexpr std::array<std::string_view, 9> kNames = {"Ex", "Ey", "Ez", "Bx", "By",
                                                    "Bz", "Jx", "Jy", "Jz"};

template <typename T>
void put_le(std::vector<unsigned char>& out, T v) {
  using U = std::make_unsigned_t<T>;
  U u = static_cast<U>(v);
  for (std::size_t k = 0; k < sizeof(T); ++k) out.push_back(static_cast<unsigned char>(u >> (8 * k)));
}

template <typename T>
T get_le(const unsigned char* p) {
  std::make_unsigned_t<T> u = 0;
  for (std::size_t k = 0; k < sizeof(T); ++k) u |= static_cast<decltype(u)>(p[k]) << (8 * k);
  return static_cast<T>(u);
}

float component(const Float3& v, int c) { return c == 0 ? v.x : (c == 1 ? v.y : v.z); }

void charge_density(const SimState& s, int species, FieldReport& rep) {
  const int nx = s.cfg.nx;
  const int ny = s.cfg.ny;
  const bool periodic_x = !s.cfg.moving_window;
  std::vector<double> rho(static_cast<std::size_t>(nx) * ny, 0.0);
  const double q = s.consts.at(species).q;
  for (const auto& reg : s.regions) {
    for (const auto& p : reg.species.at(species).parts) {
      const int gy = reg.y0 + p.iy;
      const double wx[2] = {1.0 - p.x, p.x};
      const double wy[2] = {1.0 - p.y, p.y};
      for (int a = 0; a < 2; ++a) {
        int i = p.ix + a;
        if (i >= nx) {
          if (!periodic_x) continue;
          i -= nx;
        }
        for (int b = 0; b < 2; ++b) {
          const int j = (gy + b) % ny;
          rho[static_cast<std::size_t>(j) * nx + i] += q * wx[a] * wy[b];
        }
      }
    }
  }
  rep.data.assign(rho.begin(), rho.end());
}

}  // namespace

std::uint16_t FieldReport::code() const {
  if (quantity == Quantity::charge) return static_cast<std::uint16_t>(kChargeCodeBase + species);
  return static_cast<std::uint16_t>(quantity);
}

std::string quantity_name(Quantity q, int species) {
  if (q == Quantity::charge) return "rho" + std::to_string(species);
  return std::string(kNames[static_cast<std::size_t>(q)]);
}

std::pair<Quantity, int> parse_quantity(std::string_view name) {
  for (std::size_t k = 0; k < kNames.size(); ++k) {
    if (kNames[k] == name) return {static_cast<Quantity>(k), 0};
  }
  if (name.starts_with("rho") && name.size() > 3) {
    const std::string digits(name.substr(3));
    if (std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      return {Quantity::charge, std::stoi(digits)};
    }
  }
  throw std::invalid_argument("unknown quantity '" + std::string(name) + "'");
}

FieldReport field_report(const SimState& s, Quantity q, int species, int iter) {
  FieldReport rep;
  rep.quantity = q;
  rep.species = q == Quantity::charge ? species : 0;
  rep.iter = iter < 0 ? s.iter : iter;
  rep.nx = s.cfg.nx;
  rep.ny = s.cfg.ny;
  if (q == Quantity::charge) {
    charge_density(s, species, rep);
    return rep;
  }
  const int idx = static_cast<int>(q);
  const int c = idx % 3;
  rep.data.reserve(static_cast<std::size_t>(rep.nx) * rep.ny);
  for (const auto& reg : s.regions) {
    const VecGrid& g = idx < 3 ? reg.emf.e : (idx < 6 ? reg.emf.b : reg.j_local.j);
    for (int j = 0; j < reg.n_rows; ++j) {
      const Float3* row = g.row(j);
      for (int i = 0; i < rep.nx; ++i) rep.data.push_back(component(row[i], c));
    }
  }
  return rep;
}

std::vector<unsigned char> encode_dump(const FieldReport& r) {
  std::vector<unsigned char> out(sizeof(kMagic));
  std::memcpy(out.data(), kMagic, sizeof(kMagic));
  out.reserve(kHeaderBytes + r.data.size() * 4);
  put_le<std::uint16_t>(out, kDumpVersion);
  put_le<std::uint16_t>(out, r.code());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.iter));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.nx));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.ny));
  out.resize(kHeaderBytes, 0);
  for (float v : r.data) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

FieldReport decode_dump(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw IoError("not a field dump (bad magic)");
  }
  const auto version = get_le<std::uint16_t>(bytes.data() + 8);
  if (version != kDumpVersion) throw IoError("unsupported dump version " + std::to_string(version));
  FieldReport r;
  const auto code = get_le<std::uint16_t>(bytes.data() + 10);
  if (code >= kChargeCodeBase) {
    r.quantity = Quantity::charge;
    r.species = code - kChargeCodeBase;
  } else if (code < kNames.size()) {
    r.quantity = static_cast<Quantity>(code);
  } else {
    throw IoError("unknown quantity code " + std::to_string(code));
  }
  r.iter = static_cast<int>(get_le<std::uint32_t>(bytes.data() + 12));
  r.nx = static_cast<int>(get_le<std::uint32_t>(bytes.data() + 16));
  r.ny = static_cast<int>(get_le<std::uint32_t>(bytes.data() + 20));
  const std::size_t n = static_cast<std::size_t>(r.nx) * r.ny;
  if (bytes.size() != kHeaderBytes + 4 * n) {
    throw IoError("dump size " + std::to_string(bytes.size()) + " does not match " +
                  std::to_string(r.nx) + "x" + std::to_string(r.ny));
  }
  r.data.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    r.data[k] = std::bit_cast<float>(get_le<std::uint32_t>(bytes.data() + kHeaderBytes + 4 * k));
  }
  return r;
}

void write_dump(const FieldReport& report, const std::string& path) {
  const auto bytes = encode_dump(report);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path + "' failed");
}

FieldReport read_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_dump(bytes);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

FieldReport dump_field(const SimState& state, Quantity q, const std::string& path, int species,
                       int iter) {
  FieldReport rep = field_report(state, q, species, iter);
  write_dump(rep, path);
  return rep;
}

std::string dump_path(const std::string& dir, Quantity q, int iter, int species) {
  return dir + "/" + quantity_name(q, species) + "-" + std::to_string(iter) + ".zdump";
}

MapDifference compare_field_maps(const FieldReport& a, const FieldReport& b) {
  if (a.code() != b.code()) {
    throw ShapeMismatch("quantity mismatch: " + quantity_name(a.quantity, a.species) + " vs " +
                        quantity_name(b.quantity, b.species));
  }
  if (a.nx != b.nx || a.ny != b.ny || a.data.size() != b.data.size()) {
    throw ShapeMismatch("shape mismatch: " + std::to_string(a.nx) + "x" + std::to_string(a.ny) +
                        " vs " + std::to_string(b.nx) + "x" + std::to_string(b.ny));
  }
  constexpr double eps = 1e-30;
  double amax = 0, dmax = 0, a2 = 0, d2 = 0;
  for (std::size_t k = 0; k < a.data.size(); ++k) {
    const double av = a.data[k];
    const double d = av - static_cast<double>(b.data[k]);
    amax = std::max(amax, std::abs(av));
    dmax = std::max(dmax, std::abs(d));
    a2 += av * av;
    d2 += d * d;
  }
  return {dmax / std::max(amax, eps), std::sqrt(d2) / std::max(std::sqrt(a2), eps)};
}

EnergyReport energy_report(const SimState& s, int iter) {
  EnergyReport rep;
  rep.iter = iter < 0 ? s.iter : iter;
  const double area = s.cfg.dx() * s.cfg.dy();
  double we = 0;
  double wb = 0;
  for (const auto& reg : s.regions) {
    for (int j = 0; j < reg.n_rows; ++j) {
      const Float3* e = reg.emf.e.row(j);
      const Float3* b = reg.emf.b.row(j);
      for (int i = 0; i < s.cfg.nx; ++i) {
        we += double(e[i].x) * e[i].x + double(e[i].y) * e[i].y + double(e[i].z) * e[i].z;
        wb += double(b[i].x) * b[i].x + double(b[i].y) * b[i].y + double(b[i].z) * b[i].z;
      }
    }
  }
  rep.electric_energy = 0.5 * we * area;
  rep.magnetic_energy = 0.5 * wb * area;
  rep.field_energy = rep.electric_energy + rep.magnetic_energy;

  for (std::size_t sp = 0; sp < s.cfg.species.size(); ++sp) {
    const double mass = std::abs(double(s.consts[sp].q) * s.consts[sp].m_q);
    double sum = 0;
    for (const auto& reg : s.regions) {
      for (const auto& p : reg.species[sp].parts) {
        const double u2 = double(p.ux) * p.ux + double(p.uy) * p.uy + double(p.uz) * p.uz;
        // gamma - 1 without cancellation for small u
        sum += u2 / (std::sqrt(1.0 + u2) + 1.0);
      }
    }
    const double k = mass * sum * area;
    rep.species.push_back({s.cfg.species[sp].name, k});
    rep.kinetic_energy += k;
  }
  return rep;
}

std::string energy_to_json(const EnergyReport& e) {
  nlohmann::json j;
  j["iter"] = e.iter;
  j["field_energy"] = e.field_energy;
  j["electric_energy"] = e.electric_energy;
  j["magnetic_energy"] = e.magnetic_energy;
  j["kinetic_energy"] = e.kinetic_energy;
  j["species"] = nlohmann::json::array();
  for (const auto& sp : e.species) j["species"].push_back({{"name", sp.name}, {"kinetic_energy", sp.kinetic}});
  return j.dump();
}

EnergySeries::EnergySeries(const std::string& path) : path_(path) {
  std::ofstream out(path_, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path_ + "' for writing");
}

void EnergySeries::append(const EnergyReport& e) {
  std::ofstream out(path_, std::ios::app);
  if (!out) throw IoError("cannot append to '" + path_ + "'");
  out << energy_to_json(e) << '\n';
}

}  // namespace pic
