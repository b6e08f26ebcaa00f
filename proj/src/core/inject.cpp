#include <cmath>
#include <numbers>

#include "pic/core.hpp"

namespace pic {

// SplitMix64 finalizer.
std::uint64_t CounterRng::mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t CounterRng::bits(std::uint64_t counter) const { return mix(key_ ^ mix(counter)); }

double CounterRng::uniform(std::uint64_t counter) const {
  // 53 random bits mapped to (0, 1].
  return (static_cast<double>(bits(counter) >> 11) + 1.0) * 0x1.0p-53;
}

namespace {

std::uint64_t particle_key(std::uint64_t species_key, std::int64_t abs_col, int row, int k) {
  std::uint64_t h = species_key;
  h = CounterRng::mix(h ^ static_cast<std::uint64_t>(abs_col));
  h = CounterRng::mix(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(row)) << 20));
  return CounterRng::mix(h ^ static_cast<std::uint64_t>(k));
}

// Three independent standard normal deviates via Box-Muller.
std::array<double, 3> gaussian3(const CounterRng& rng) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double r1 = std::sqrt(-2.0 * std::log(rng.uniform(0)));
  const double t1 = two_pi * rng.uniform(1);
  const double r2 = std::sqrt(-2.0 * std::log(rng.uniform(2)));
  const double t2 = two_pi * rng.uniform(3);
  return {r1 * std::cos(t1), r1 * std::sin(t1), r2 * std::cos(t2)};
}

}  // namespace

void inject_block(const SpeciesSpec& spec, std::size_t species_index, std::uint64_t seed,
                  const InjectionBlock& block, std::vector<Particle>& out) {
  const std::uint64_t species_key =
      CounterRng::mix(CounterRng::mix(seed) ^ (0xA5A5A5A5ULL + species_index));
  const bool cold = spec.u_th[0] == 0.0f && spec.u_th[1] == 0.0f && spec.u_th[2] == 0.0f;
  const int ppc = spec.ppc_x * spec.ppc_y;

  out.reserve(out.size() + static_cast<std::size_t>(block.ncols) * block.nrows * ppc);
  for (int row = block.row0; row < block.row0 + block.nrows; ++row) {
    for (int col = block.col0; col < block.col0 + block.ncols; ++col) {
      const std::int64_t abs_col = col + block.abs_col_offset;
      for (int ky = 0; ky < spec.ppc_y; ++ky) {
        for (int kx = 0; kx < spec.ppc_x; ++kx) {
          Particle p;
          p.ix = col - block.local_col0;
          p.iy = row - block.local_row0;
          p.x = static_cast<float>((kx + 0.5) / spec.ppc_x);
          p.y = static_cast<float>((ky + 0.5) / spec.ppc_y);
          if (cold) {
            p.ux = spec.u_fl[0];
            p.uy = spec.u_fl[1];
            p.uz = spec.u_fl[2];
          } else {
            const CounterRng rng(particle_key(species_key, abs_col, row, ky * spec.ppc_x + kx));
            const auto g = gaussian3(rng);
            p.ux = spec.u_fl[0] + static_cast<float>(spec.u_th[0] * g[0]);
            p.uy = spec.u_fl[1] + static_cast<float>(spec.u_th[1] * g[1]);
            p.uz = spec.u_fl[2] + static_cast<float>(spec.u_th[2] * g[2]);
          }
          out.push_back(p);
        }
      }
    }
  }
}

std::vector<Particle> inject_uniform(const SpeciesSpec& spec, std::size_t species_index,
                                     const SimConfig& cfg) {
  std::vector<Particle> parts;
  InjectionBlock block;
  block.ncols = cfg.nx;
  block.nrows = cfg.ny;
  inject_block(spec, species_index, cfg.seed, block, parts);
  return parts;
}

}  // namespace pic
