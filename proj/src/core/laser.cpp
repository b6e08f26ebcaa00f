#include <cmath>
#include <numbers>

#include "pic/core.hpp"

namespace pic {

float laser_envelope(const LaserSpec& laser, double x) {
  const double rise = laser.rise_length();
  const double flat = laser.flat_length();
  const double fall = laser.fall_length();
  const double start = laser.start_x;
  constexpr double half_pi = 0.5 * std::numbers::pi;

  if (x > start) return 0.0f;  // ahead of the pulse
  if (x > start - rise) {
    const double e = std::sin(half_pi * (x - start) / rise);
    return static_cast<float>(e * e);
  }
  if (x > start - (rise + flat)) return 1.0f;
  if (x > start - (rise + flat + fall)) {
    const double e = std::sin(half_pi * (x - (start - rise - flat - fall)) / fall);
    return static_cast<float>(e * e);
  }
  return 0.0f;
}

void init_laser(EMFields& emf, const LaserSpec& laser, const SimConfig& cfg) {
  if (laser.total_length() > cfg.box_x) {
    throw ConfigError(ConfigError::Code::laser_wider_than_box, "laser",
                      "laser: envelope length " + std::to_string(laser.total_length()) +
                          " exceeds box_x " + std::to_string(cfg.box_x));
  }
  const double amp = static_cast<double>(laser.a0) * laser.omega0;
  const double k = laser.omega0;
  const double cos_pol = std::cos(laser.polarization);
  const double sin_pol = std::sin(laser.polarization);
  const double dx = cfg.dx();

  auto& e = emf.e;
  auto& b = emf.b;
  for (int i = -e.gx_lo(); i < e.nx() + e.gx_hi(); ++i) {
    // E components sit on integer x nodes, By and Bz half a cell ahead.
    const double xe = i * dx;
    const double xb = (i + 0.5) * dx;
    const double fe = amp * laser_envelope(laser, xe) * std::cos(k * (xe - laser.start_x));
    const double fb = amp * laser_envelope(laser, xb) * std::cos(k * (xb - laser.start_x));
    for (int j = -e.gy_lo(); j < e.ny() + e.gy_hi(); ++j) {
      e(i, j).y += static_cast<float>(fe * cos_pol);
      e(i, j).z += static_cast<float>(fe * sin_pol);
      b(i, j).y += static_cast<float>(-fb * sin_pol);
      b(i, j).z += static_cast<float>(fb * cos_pol);
    }
  }
}

}  // namespace pic
