#pragma once

#include <cstdint>
#include <random>

namespace kfss {

/// SplitMix64 step (Steele, Lea, Flood 2014); advances `state`.
std::uint64_t splitmix64(std::uint64_t& state);

/// Campaign random stream: std::mt19937_64 keyed by (seed, stream) through
/// SplitMix64, so each system index owns an independent substream and results
/// do not depend on evaluation order or worker count.
///
/// Distributions are implemented here rather than via <random> distribution
/// classes, whose output is implementation-defined:
///   uniform()  top 53 bits of one draw, in [0, 1)
///   normal()   Box-Muller, one variate per pair of uniforms (the sine branch
///              is cached)
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace kfss
