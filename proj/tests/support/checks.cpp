#include "support/checks.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include "pic/kernels.hpp"
#include "pic/regions.hpp"
#include "pic/tasking.hpp"
#include "support/oracles.hpp"

namespace checks {

using namespace pic;

namespace {

// Moves p by (dx, dy) cells, renormalizing the offset into [0,1).
Particle displaced(const Particle& p, float ddx, float ddy) {
  Particle q = p;
  const float x1 = p.x + ddx;
  const float y1 = p.y + ddy;
  const int di = x1 < 0 ? -1 : (x1 >= 1 ? 1 : 0);
  const int dj = y1 < 0 ? -1 : (y1 >= 1 ? 1 : 0);
  q.ix += di;
  q.iy += dj;
  q.x = std::min(x1 - static_cast<float>(di), std::nextafter(1.0f, 0.0f));
  q.y = std::min(y1 - static_cast<float>(dj), std::nextafter(1.0f, 0.0f));
  return q;
}

}  // namespace

ContinuityResult continuity_trials(int n_trials, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  std::uniform_real_distribution<float> step(-0.999f, 0.999f);
  std::uniform_real_distribution<float> mag(0.1f, 2.0f);
  std::uniform_real_distribution<float> cell(0.05f, 0.5f);

  ContinuityResult res;
  res.trials = n_trials;
  constexpr int n = 6;
  VecGrid j(n, n);
  for (int t = 0; t < n_trials; ++t) {
    j.fill();
    Particle p0;
    p0.ix = 2;
    p0.iy = 2;
    p0.x = std::min(unit(gen), std::nextafter(1.0f, 0.0f));
    p0.y = std::min(unit(gen), std::nextafter(1.0f, 0.0f));
    // Small moves are as important as cell crossings.
    const float scale = (t % 4 == 0) ? 1e-3f : 1.0f;
    const Particle p1 = displaced(p0, scale * step(gen), scale * step(gen));
    const float q = (gen() & 1 ? 1.0f : -1.0f) * mag(gen);
    const float qvz = q * step(gen);
    const float dt = cell(gen) * 0.5f;
    const float dx = cell(gen);
    const float dy = cell(gen);
    deposit_current(p0, p1, q, qvz, j.view(), dt, dx, dy);

    oracle::Plane rho0(n + 3, n + 3), rho1(n + 3, n + 3);
    oracle::deposit_charge(rho0, p0.ix, p0.iy, p0.x, p0.y, q);
    oracle::deposit_charge(rho1, p1.ix, p1.iy, p1.x, p1.y, q);

    const double unit_ulp = oracle::ulp(std::fabs(q));
    double jz_sum = 0;
    for (int jj = 0; jj < n; ++jj) {
      for (int ii = 0; ii < n; ++ii) {
        const double div = (static_cast<double>(j(ii, jj).x) - j(ii - 1, jj).x) / dx +
                           (static_cast<double>(j(ii, jj).y) - j(ii, jj - 1).y) / dy;
        const double r = (rho1(ii, jj) - rho0(ii, jj)) + static_cast<double>(dt) * div;
        res.max_ulps = std::max(res.max_ulps, std::fabs(r) / unit_ulp);
        jz_sum += j(ii, jj).z;
      }
    }
    if (qvz != 0.0f) {
      res.max_jz_rel = std::max(res.max_jz_rel, std::fabs(jz_sum - qvz) / std::fabs(qvz));
    }
  }
  return res;
}

BorisResult boris_trials(int n_trials, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<float> mom(-2.0f, 2.0f);
  std::uniform_real_distribution<float> field(-5.0f, 5.0f);
  std::uniform_real_distribution<float> mq(0.5f, 2.0f);
  std::uniform_real_distribution<float> tstep(0.01f, 0.2f);

  BorisResult res;
  res.trials = n_trials;
  for (int t = 0; t < n_trials; ++t) {
    Particle p;
    p.x = p.y = 0.5f;
    p.ux = mom(gen);
    p.uy = mom(gen);
    p.uz = mom(gen);
    const float b0 = field(gen);
    const float m_q = (gen() & 1 ? 1.0f : -1.0f) * mq(gen);
    const float dt = tstep(gen);
    InterpolatedField f;
    f.bp = {0.0f, 0.0f, b0};
    const Particle q = boris_advance(p, f, m_q, dt, 1.0f, 1.0f);

    double ux, uy;
    oracle::boris_rotation_z(p.ux, p.uy, p.uz, b0, m_q, dt, ux, uy);
    const double norm0 = std::sqrt(static_cast<double>(p.ux) * p.ux +
                                   static_cast<double>(p.uy) * p.uy +
                                   static_cast<double>(p.uz) * p.uz);
    const double norm1 = std::sqrt(static_cast<double>(q.ux) * q.ux +
                                   static_cast<double>(q.uy) * q.uy +
                                   static_cast<double>(q.uz) * q.uz);
    const double err = std::sqrt((q.ux - ux) * (q.ux - ux) + (q.uy - uy) * (q.uy - uy) +
                                 (q.uz - static_cast<double>(p.uz)) * (q.uz - p.uz));
    res.max_rotation_rel = std::max(res.max_rotation_rel, err / norm0);
    res.max_norm_ulps = std::max(
        res.max_norm_ulps, std::fabs(norm1 - norm0) / oracle::ulp(static_cast<float>(norm0)));
  }
  return res;
}

PlaneWaveResult plane_wave(int steps) {
  const int nx = 32, ny = 16;
  const double dx = 0.1, dy = 0.1, dt = 0.06;
  const double kx = 2 * std::numbers::pi * 6 / (nx * dx);
  const double ky = 2 * std::numbers::pi * 3 / (ny * dy);
  const double w = oracle::yee_frequency(kx, ky, dt, dx, dy);
  const double amp = 1.0;
  const double sw = std::sin(0.5 * w * dt);
  const double cw = std::cos(0.5 * w * dt);
  const double bxm = amp * (dt / dy) * std::sin(0.5 * ky * dy) / sw;
  const double bym = -amp * (dt / dx) * std::sin(0.5 * kx * dx) / sw;

  // TM mode: Ez at (i, j), Bx at (i, j+1/2), By at (i+1/2, j); B is seeded
  // at the integer time level, i.e. the mean of its two half-step values.
  EMFields emf(nx, ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      emf.e(i, j).z = static_cast<float>(amp * std::cos(kx * i * dx + ky * j * dy));
      emf.b(i, j).x = static_cast<float>(bxm * cw * std::cos(kx * i * dx + ky * (j + 0.5) * dy));
      emf.b(i, j).y = static_cast<float>(bym * cw * std::cos(kx * (i + 0.5) * dx + ky * j * dy));
    }
  }
  refresh_periodic_guards(emf.e, true);
  refresh_periodic_guards(emf.b, true);
  const VecGrid jzero(nx, ny);

  auto energy = [&] {
    double u = 0;
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const auto& e = emf.e(i, j);
        const auto& b = emf.b(i, j);
        u += 0.5 * (double(e.x) * e.x + double(e.y) * e.y + double(e.z) * e.z +
                    double(b.x) * b.x + double(b.y) * b.y + double(b.z) * b.z);
      }
    }
    return u * dx * dy;
  };
  auto phase = [&] {
    double c = 0, s = 0;
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const double psi = kx * i * dx + ky * j * dy;
        c += emf.e(i, j).z * std::cos(psi);
        s += emf.e(i, j).z * std::sin(psi);
      }
    }
    return std::atan2(s, c);
  };

  PlaneWaveResult res;
  res.steps = steps;
  res.omega_discrete = w;
  res.omega_continuous = std::hypot(kx, ky);
  const double w0 = energy();
  std::vector<double> phases{phase()};
  for (int n = 0; n < steps; ++n) {
    yee_advance(emf, jzero.view(), static_cast<float>(dt), static_cast<float>(dx),
                static_cast<float>(dy), true);
    refresh_periodic_guards(emf.e, true);
    refresh_periodic_guards(emf.b, true);
    res.energy_drift = std::max(res.energy_drift, std::fabs(energy() - w0) / w0);
    double ph = phase();
    while (ph < phases.back() - std::numbers::pi) ph += 2 * std::numbers::pi;
    while (ph > phases.back() + std::numbers::pi) ph -= 2 * std::numbers::pi;
    phases.push_back(ph);
  }

  // Least-squares slope of the unwrapped phase against time.
  const double m = static_cast<double>(phases.size());
  double st = 0, sp = 0, stt = 0, stp = 0;
  for (std::size_t n = 0; n < phases.size(); ++n) {
    const double t = n * dt;
    st += t;
    sp += phases[n];
    stt += t * t;
    stp += t * phases[n];
  }
  res.omega_measured = (m * stp - st * sp) / (m * stt - st * st);
  return res;
}

double decomposition_error(int n_regions, std::uint64_t seed) {
  const int nx = 24, ny = 36;
  SimConfig cfg;
  cfg.nx = nx;
  cfg.ny = ny;
  cfg.box_x = 2.4;
  cfg.box_y = 3.6;
  cfg.dt = 0.05;
  cfg.n_steps = 1;
  cfg.n_regions = n_regions;
  auto regions = partition(cfg);

  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  std::uniform_real_distribution<float> step(-0.9f, 0.9f);
  std::uniform_int_distribution<int> col(0, nx - 1), row(0, ny - 1);

  VecGrid global(nx, ny);
  const float q = -0.25f, dt = 0.05f, dx = 0.1f, dy = 0.1f;
  for (int k = 0; k < 4000; ++k) {
    Particle p0;
    p0.ix = col(gen);
    p0.iy = row(gen);
    p0.x = std::min(unit(gen), std::nextafter(1.0f, 0.0f));
    p0.y = std::min(unit(gen), std::nextafter(1.0f, 0.0f));
    const Particle p1 = displaced(p0, step(gen), step(gen));
    const float qvz = q * step(gen);
    deposit_current(p0, p1, q, qvz, global.view(), dt, dx, dy);

    for (auto& r : regions) {
      if (p0.iy < r.y0 || p0.iy >= r.y0 + r.n_rows) continue;
      Particle a = p0, b = p1;
      a.iy -= r.y0;
      b.iy -= r.y0;
      deposit_current(a, b, q, qvz, r.j_local.j.view(), dt, dx, dy);
    }
  }

  // Whole-grid oracle: fold every guard cell into its periodic image.
  oracle::Plane ref_x(nx, ny), ref_y(nx, ny), ref_z(nx, ny);
  for (int j = -global.gy_lo(); j < ny + global.gy_hi(); ++j) {
    for (int i = -global.gx_lo(); i < nx + global.gx_hi(); ++i) {
      ref_x(i, j) += global(i, j).x;
      ref_y(i, j) += global(i, j).y;
      ref_z(i, j) += global(i, j).z;
    }
  }
  double scale = 0;
  for (std::size_t k = 0; k < ref_x.v.size(); ++k) {
    scale = std::max({scale, std::fabs(ref_x.v[k]), std::fabs(ref_y.v[k]), std::fabs(ref_z.v[k])});
  }

  const int n = static_cast<int>(regions.size());
  for (int r = 0; r < n; ++r) {
    reduce_ghost_current(regions[r], regions[lower_neighbor(r, n)],
                         regions[upper_neighbor(r, n)]);
  }

  double worst = 0;
  for (auto& r : regions) {
    fold_x_guards(r.j_local.j.view(), 0, r.n_rows);
    for (int j = 0; j < r.n_rows; ++j) {
      for (int i = 0; i < nx; ++i) {
        const auto& v = r.j_local.j(i, j);
        const int gj = r.y0 + j;
        worst = std::max({worst, std::fabs(v.x - ref_x(i, gj)), std::fabs(v.y - ref_y(i, gj)),
                          std::fabs(v.z - ref_z(i, gj))});
      }
    }
  }
  return worst / scale;
}

CommutativeResult commutative_stress(int repetitions, int workers) {
  using namespace pic::tasking;
  CommutativeResult res;
  res.repetitions = repetitions;

  TaskRuntime rt;
  AccessAuditor auditor;
  rt.set_observer(&auditor);
  rt.run_pool(workers);
  const ResourceId a{42};
  volatile int counter = 0;
  for (int rep = 0; rep < repetitions; ++rep) {
    counter = 0;
    std::atomic<int> ticket{0};
    int order[4] = {0, 0, 0, 0};
    for (int k = 0; k < 4; ++k) {
      rt.spawn(
          [&, k] {
            const int v = counter;
            std::this_thread::yield();
            counter = v + 1;
            order[k] = ticket.fetch_add(1);
          },
          {commutative(a)}, "rmw");
    }
    rt.taskwait();
    if (counter != 4) ++res.wrong_sums;
    (order[0] < order[1] ? res.first_before_second : res.second_before_first) += 1;
  }
  rt.shutdown();
  res.violations = auditor.violations();
  return res;
}

}  // namespace checks
