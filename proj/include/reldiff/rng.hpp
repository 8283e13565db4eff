#pragma once
#include <cstdint>

namespace reldiff {

// Stateless normal generator keyed by (seed, trajectory, step, channel).
// Any draw can be reproduced without replaying the stream, so results do not
// depend on how trajectories are scheduled.
class CounterRng {
public:
  CounterRng(std::uint64_t seed, std::uint64_t trajectory);

  double uniform(std::uint64_t step, std::uint32_t channel) const;  // in (0,1)
  double normal(std::uint64_t step, std::uint32_t channel) const;

  std::uint64_t key() const { return key_; }

private:
  std::uint64_t key_;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace reldiff
