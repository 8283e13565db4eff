#include "reldiff/rng.hpp"

#include <cmath>
#include <numbers>

namespace reldiff {

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t trajectory)
    : key_(mix64(mix64(seed) ^ (trajectory * 0xd1b54a32d192ed03ULL))) {}

double CounterRng::uniform(std::uint64_t step, std::uint32_t channel) const {
  std::uint64_t h = mix64(key_ ^ mix64(step * 0x9e3779b97f4a7c15ULL + channel));
  h = mix64(h + channel);
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t step, std::uint32_t channel) const {
  // Box-Muller on two sub-channels; the cosine branch only
  const double u1 = uniform(step, 2 * channel);
  const double u2 = uniform(step, 2 * channel + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace reldiff
