#pragma once

#include "qprecon/types.hpp"

#include <cstdint>

namespace qprecon {

/// xoshiro256++ with SplitMix64 seeding. A fixed, documented generator is
/// used everywhere (instead of std::mt19937 + distributions, whose bit
/// streams are implementation-defined) so that fixtures and generated
/// instances are reproducible from a seed alone.
///
/// Bit paths:
///   uniform01: (next() >> 11) * 2^-53, in [0, 1)
///   gaussian:  Box-Muller on u1 = ((next() >> 11) + 1) * 2^-53 in (0, 1]
///              and u2 = uniform01; the sine variate is cached.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent stream derived from (seed, stream_index).
  static Rng stream(std::uint64_t seed, std::uint64_t stream_index);

  std::uint64_t next();
  double uniform01();
  double gaussian();

  /// Matrix with i.i.d. N(0,1) entries, filled in column-major order.
  Matrix gaussian_matrix(int rows, int cols);

  /// Uniform integer in [0, bound) by rejection; bound must be positive.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t state_[4];
  double cached_gaussian_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace qprecon
