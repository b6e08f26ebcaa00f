#include <cmath>
#include <string>

#include "pic/core.hpp"

namespace pic {

namespace {

[[noreturn]] void fail(ConfigError::Code code, const std::string& field, const std::string& msg) {
  throw ConfigError(code, field, field + ": " + msg);
}

void check_vec_nonneg(const Vec3& v, const std::string& field) {
  for (float c : v) {
    if (!(c >= 0.0f) || !std::isfinite(c)) fail(ConfigError::Code::invalid_value, field, "components must be finite and >= 0");
  }
}

}  // namespace

float LaserSpec::total_length() const { return rise_length() + flat_length() + fall_length(); }

double SimConfig::cfl_limit() const {
  const double ddx = dx();
  const double ddy = dy();
  return 1.0 / std::sqrt(1.0 / (ddx * ddx) + 1.0 / (ddy * ddy));
}

const SimConfig& validate_config(const SimConfig& cfg) {
  using C = ConfigError::Code;
  if (cfg.nx < 1) fail(C::empty_grid, "nx", "must be >= 1");
  if (cfg.ny < 1) fail(C::empty_grid, "ny", "must be >= 1");
  if (!(cfg.box_x > 0) || !std::isfinite(cfg.box_x)) fail(C::invalid_value, "box_x", "must be > 0");
  if (!(cfg.box_y > 0) || !std::isfinite(cfg.box_y)) fail(C::invalid_value, "box_y", "must be > 0");
  if (!(cfg.dt > 0) || !std::isfinite(cfg.dt)) fail(C::invalid_value, "dt", "must be > 0");
  if (!(cfg.dt < cfg.cfl_limit())) {
    fail(C::cfl_violation, "dt",
         "time step " + std::to_string(cfg.dt) + " violates the Courant limit " +
             std::to_string(cfg.cfl_limit()));
  }
  if (cfg.n_steps < 0) fail(C::invalid_value, "n_steps", "must be >= 0");
  if (cfg.n_regions < 1) fail(C::invalid_value, "n_regions", "must be >= 1");
  if (cfg.n_regions > cfg.ny) {
    fail(C::region_count_exceeds_rows, "n_regions",
         std::to_string(cfg.n_regions) + " regions for " + std::to_string(cfg.ny) + " rows");
  }
  if (cfg.filter.kind != FilterKind::none && cfg.filter.n_passes < 1) {
    fail(C::invalid_value, "filter.n_passes", "must be >= 1 when filtering");
  }
  for (std::size_t s = 0; s < cfg.species.size(); ++s) {
    const auto& sp = cfg.species[s];
    const std::string prefix = "species[" + std::to_string(s) + "].";
    if (sp.ppc_x < 1) fail(C::invalid_value, prefix + "ppc_x", "must be >= 1");
    if (sp.ppc_y < 1) fail(C::invalid_value, prefix + "ppc_y", "must be >= 1");
    if (sp.m_q == 0.0f || !std::isfinite(sp.m_q)) fail(C::invalid_value, prefix + "m_q", "must be finite and nonzero");
    if (!(sp.density >= 0.0f) || !std::isfinite(sp.density)) fail(C::invalid_value, prefix + "density", "must be >= 0");
    check_vec_nonneg(sp.u_th, prefix + "u_th");
    for (float c : sp.u_fl) {
      if (!std::isfinite(c)) fail(C::invalid_value, prefix + "u_fl", "must be finite");
    }
  }
  if (cfg.laser) {
    const auto& l = *cfg.laser;
    if (!(l.a0 > 0)) fail(C::invalid_value, "laser.a0", "must be > 0");
    if (!(l.omega0 > 0)) fail(C::invalid_value, "laser.omega0", "must be > 0");
    if (l.fwhm < 0 || l.rise < 0 || l.flat < 0 || l.fall < 0) {
      fail(C::invalid_value, "laser", "envelope lengths must be >= 0");
    }
    if (!(l.total_length() > 0)) fail(C::invalid_value, "laser", "envelope has zero length");
  }
  return cfg;
}

SpeciesConstants species_constants(const SpeciesSpec& spec) {
  SpeciesConstants c;
  c.m_q = spec.m_q;
  c.q = std::copysign(spec.density, spec.m_q) / static_cast<float>(spec.ppc_x * spec.ppc_y);
  return c;
}

}  // namespace pic
