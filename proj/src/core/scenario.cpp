#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pic/core.hpp"

namespace pic {

// Defined in the generated builtin_scenarios.cpp.
namespace builtin {
struct Entry {
  const char* name;
  const char* json;
};
extern const Entry kScenarios[];
extern const std::size_t kScenarioCount;
}  // namespace builtin

namespace {

using json = nlohmann::json;
using C = ConfigError::Code;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(C::parse_error, where, where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      const std::string field = where.empty() ? key : where + "." + key;
      throw ConfigError(C::unknown_key, field, "unknown key '" + field + "'");
    }
  }
}

template <typename T>
T get(const json& obj, const std::string& key, const std::string& where) {
  const std::string field = where.empty() ? key : where + "." + key;
  if (!obj.contains(key)) throw ConfigError(C::parse_error, field, "missing key '" + field + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(C::parse_error, field, field + ": " + e.what());
  }
}

template <typename T>
T get_or(const json& obj, const std::string& key, const std::string& where, T fallback) {
  return obj.contains(key) ? get<T>(obj, key, where) : fallback;
}

Vec3 get_vec3(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) return {0, 0, 0};
  const auto v = get<std::vector<float>>(obj, key, where);
  if (v.size() != 3) {
    throw ConfigError(C::parse_error, where + "." + key, where + "." + key + ": expected 3 values");
  }
  return {v[0], v[1], v[2]};
}

FilterKind parse_filter_kind(const std::string& s) {
  if (s == "none") return FilterKind::none;
  if (s == "binomial") return FilterKind::binomial;
  if (s == "compensated") return FilterKind::compensated;
  throw ConfigError(C::invalid_value, "filter.kind", "filter.kind: unknown filter '" + s + "'");
}

const char* filter_kind_name(FilterKind k) {
  switch (k) {
    case FilterKind::none: return "none";
    case FilterKind::binomial: return "binomial";
    case FilterKind::compensated: return "compensated";
  }
  return "none";
}

}  // namespace

SimConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(C::parse_error, "", std::string("invalid JSON: ") + e.what());
  }
  check_keys(doc,
             {"nx", "ny", "box_x", "box_y", "dt", "n_steps", "n_regions", "seed", "filter",
              "moving_window", "species", "laser"},
             "");

  SimConfig cfg;
  cfg.nx = get<int>(doc, "nx", "");
  cfg.ny = get<int>(doc, "ny", "");
  cfg.box_x = get<double>(doc, "box_x", "");
  cfg.box_y = get<double>(doc, "box_y", "");
  cfg.dt = get<double>(doc, "dt", "");
  cfg.n_steps = get<int>(doc, "n_steps", "");
  cfg.n_regions = get_or<int>(doc, "n_regions", "", 1);
  cfg.seed = get_or<std::uint64_t>(doc, "seed", "", 0);
  cfg.moving_window = get_or<bool>(doc, "moving_window", "", false);

  if (doc.contains("filter")) {
    const auto& f = doc.at("filter");
    check_keys(f, {"kind", "n_passes"}, "filter");
    cfg.filter.kind = parse_filter_kind(get<std::string>(f, "kind", "filter"));
    cfg.filter.n_passes = get_or<int>(f, "n_passes", "filter", 0);
  }

  if (doc.contains("species")) {
    const auto& arr = doc.at("species");
    if (!arr.is_array()) throw ConfigError(C::parse_error, "species", "species: expected an array");
    for (std::size_t s = 0; s < arr.size(); ++s) {
      const std::string where = "species[" + std::to_string(s) + "]";
      const auto& o = arr[s];
      check_keys(o, {"name", "m_q", "ppc_x", "ppc_y", "u_fl", "u_th", "density"}, where);
      SpeciesSpec sp;
      sp.name = get_or<std::string>(o, "name", where, "species" + std::to_string(s));
      sp.m_q = get<float>(o, "m_q", where);
      sp.ppc_x = get<int>(o, "ppc_x", where);
      sp.ppc_y = get<int>(o, "ppc_y", where);
      sp.u_fl = get_vec3(o, "u_fl", where);
      sp.u_th = get_vec3(o, "u_th", where);
      sp.density = get_or<float>(o, "density", where, 1.0f);
      cfg.species.push_back(std::move(sp));
    }
  }

  if (doc.contains("laser") && !doc.at("laser").is_null()) {
    const auto& o = doc.at("laser");
    check_keys(o, {"a0", "omega0", "fwhm", "rise", "flat", "fall", "polarization", "start_x"},
               "laser");
    LaserSpec l;
    l.a0 = get<float>(o, "a0", "laser");
    l.omega0 = get<float>(o, "omega0", "laser");
    l.fwhm = get_or<float>(o, "fwhm", "laser", 0.0f);
    l.rise = get_or<float>(o, "rise", "laser", 0.0f);
    l.flat = get_or<float>(o, "flat", "laser", 0.0f);
    l.fall = get_or<float>(o, "fall", "laser", 0.0f);
    l.polarization = get_or<float>(o, "polarization", "laser", 0.0f);
    l.start_x = get<float>(o, "start_x", "laser");
    cfg.laser = l;
  }
  return cfg;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(C::parse_error, "", "cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const SimConfig& cfg) {
  json doc;
  doc["nx"] = cfg.nx;
  doc["ny"] = cfg.ny;
  doc["box_x"] = cfg.box_x;
  doc["box_y"] = cfg.box_y;
  doc["dt"] = cfg.dt;
  doc["n_steps"] = cfg.n_steps;
  doc["n_regions"] = cfg.n_regions;
  doc["seed"] = cfg.seed;
  doc["filter"] = {{"kind", filter_kind_name(cfg.filter.kind)}, {"n_passes", cfg.filter.n_passes}};
  doc["moving_window"] = cfg.moving_window;
  doc["species"] = json::array();
  for (const auto& sp : cfg.species) {
    doc["species"].push_back({{"name", sp.name},
                              {"m_q", sp.m_q},
                              {"ppc_x", sp.ppc_x},
                              {"ppc_y", sp.ppc_y},
                              {"u_fl", sp.u_fl},
                              {"u_th", sp.u_th},
                              {"density", sp.density}});
  }
  if (cfg.laser) {
    const auto& l = *cfg.laser;
    doc["laser"] = {{"a0", l.a0},         {"omega0", l.omega0}, {"fwhm", l.fwhm},
                    {"rise", l.rise},     {"flat", l.flat},     {"fall", l.fall},
                    {"polarization", l.polarization}, {"start_x", l.start_x}};
  }
  return doc.dump(2);
}

std::vector<std::string> builtin_scenario_names() {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < builtin::kScenarioCount; ++i) names.emplace_back(builtin::kScenarios[i].name);
  return names;
}

std::optional<std::string> builtin_scenario_json(std::string_view name) {
  for (std::size_t i = 0; i < builtin::kScenarioCount; ++i) {
    if (name == builtin::kScenarios[i].name) return std::string(builtin::kScenarios[i].json);
  }
  return std::nullopt;
}

SimConfig resolve_scenario(const std::string& name_or_path) {
  if (auto text = builtin_scenario_json(name_or_path)) return parse_config(*text);
  return load_config(name_or_path);
}

}  // namespace pic
