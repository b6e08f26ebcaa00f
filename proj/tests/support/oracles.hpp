#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Everything here is written in double precision from first principles and
// shares no code with the library kernels.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "pic/core.hpp"
#include "pic/grid.hpp"

namespace oracle {

// Dense periodic 2D scalar array in double precision.
struct Plane {
  int nx = 0;
  int ny = 0;
  std::vector<double> v;

  Plane() = default;
  Plane(int nx_, int ny_) : nx(nx_), ny(ny_), v(static_cast<std::size_t>(nx_) * ny_, 0.0) {}
  double& operator()(int i, int j) {
    i = ((i % nx) + nx) % nx;
    j = ((j % ny) + ny) % ny;
    return v[static_cast<std::size_t>(j) * nx + i];
  }
  double operator()(int i, int j) const { return const_cast<Plane&>(*this)(i, j); }
};

// Cloud-in-cell charge of one particle on the integer nodes around it.
inline void deposit_charge(Plane& rho, int ix, int iy, double x, double y, double q) {
  rho(ix, iy) += q * (1 - x) * (1 - y);
  rho(ix + 1, iy) += q * x * (1 - y);
  rho(ix, iy + 1) += q * (1 - x) * y;
  rho(ix + 1, iy + 1) += q * x * y;
}

// Boris rotation in a uniform field B = (0, 0, b0) with E = 0: the momentum
// turns by -2 atan(w dt / 2), w = b0 / (m_q gamma).
inline void boris_rotation_z(double ux, double uy, double uz, double b0, double m_q, double dt,
                             double& ux_out, double& uy_out) {
  const double gamma = std::sqrt(1 + ux * ux + uy * uy + uz * uz);
  const double w = b0 / (m_q * gamma);
  const double theta = 2 * std::atan(0.5 * w * dt);
  ux_out = ux * std::cos(theta) + uy * std::sin(theta);
  uy_out = -ux * std::sin(theta) + uy * std::cos(theta);
}

// Angular frequency of a vacuum wave of wavenumber (kx, ky) on the 2D Yee
// mesh: sin^2(w dt/2)/dt^2 = sin^2(kx dx/2)/dx^2 + sin^2(ky dy/2)/dy^2.
inline double yee_frequency(double kx, double ky, double dt, double dx, double dy) {
  const double sx = std::sin(0.5 * kx * dx) / dx;
  const double sy = std::sin(0.5 * ky * dy) / dy;
  return 2.0 / dt * std::asin(dt * std::sqrt(sx * sx + sy * sy));
}

// Guardless periodic Yee solver in double precision; same staggering and
// substep order as a leapfrog step that ends with E and B at the same time.
struct PeriodicYee {
  int nx, ny;
  double dx, dy;
  Plane ex, ey, ez, bx, by, bz;

  PeriodicYee(int nx_, int ny_, double dx_, double dy_)
      : nx(nx_), ny(ny_), dx(dx_), dy(dy_), ex(nx_, ny_), ey(nx_, ny_), ez(nx_, ny_),
        bx(nx_, ny_), by(nx_, ny_), bz(nx_, ny_) {}

  void half_b(double dt) {
    Plane nbx = bx, nby = by, nbz = bz;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        nbx(i, j) -= dt / dy * (ez(i, j + 1) - ez(i, j));
        nby(i, j) += dt / dx * (ez(i + 1, j) - ez(i, j));
        nbz(i, j) += -dt / dx * (ey(i + 1, j) - ey(i, j)) + dt / dy * (ex(i, j + 1) - ex(i, j));
      }
    bx = nbx;
    by = nby;
    bz = nbz;
  }

  void full_e(double dt, const Plane* jx, const Plane* jy, const Plane* jz) {
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        ex(i, j) += dt / dy * (bz(i, j) - bz(i, j - 1)) - (jx ? dt * (*jx)(i, j) : 0.0);
        ey(i, j) += -dt / dx * (bz(i, j) - bz(i - 1, j)) - (jy ? dt * (*jy)(i, j) : 0.0);
        ez(i, j) += dt / dx * (by(i, j) - by(i - 1, j)) - dt / dy * (bx(i, j) - bx(i, j - 1)) -
                    (jz ? dt * (*jz)(i, j) : 0.0);
      }
  }

  void step(double dt, const Plane* jx = nullptr, const Plane* jy = nullptr,
            const Plane* jz = nullptr) {
    half_b(0.5 * dt);
    full_e(dt, jx, jy, jz);
    half_b(0.5 * dt);
  }
};

// Laser envelope: sin^2 rise of length `rise` ending at `start`, flat top,
// sin^2 fall.
inline double envelope(double x, double start, double rise, double flat, double fall) {
  const double hp = 0.5 * std::numbers::pi;
  if (x > start) return 0;
  if (x > start - rise) {
    const double s = std::sin(hp * (start - x) / rise);
    return s * s;
  }
  if (x > start - rise - flat) return 1;
  if (x > start - rise - flat - fall) {
    const double s = std::sin(hp * (x - (start - rise - flat - fall)) / fall);
    return s * s;
  }
  return 0;
}

// Float units-in-the-last-place distance scale of a value.
inline double ulp(float v) {
  const float a = std::fabs(v);
  return static_cast<double>(std::nextafter(a, INFINITY) - a);
}

}  // namespace oracle
