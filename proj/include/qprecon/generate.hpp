#pragma once

#include "qprecon/problems.hpp"
#include "qprecon/types.hpp"

#include <cstdint>

namespace qprecon::io {

enum class Model { GaussianFactors, ZeroMatrix };
enum class Sampling { Bernoulli, GaussianSensing, Full };

struct GeneratorSpec {
  int m = 0, n = 0, k = 0;
  Model model = Model::GaussianFactors;
  Sampling sampling = Sampling::Bernoulli;
  double bernoulli_p = 0.0;  // sampling rate for Bernoulli
  long sensing_d = 0;        // measurement count for Gaussian sensing
  std::uint64_t seed = 0;

  void validate() const;
};

/// Deterministic synthetic instance from (spec, seed): Gaussian ground-truth
/// factors (regenerated on the probability-zero rank drop), then either a
/// Bernoulli index set, a dense Gaussian sensing block, or full observation.
/// Observations are exact (noiseless).
problems::ProblemInstance generate(const GeneratorSpec& spec);

enum class InitStrategy { Spectral, RandomGaussian };

struct InitSpec {
  InitStrategy strategy = InitStrategy::Spectral;
  double unbalance_lambda = 1.0;  // 1 = balanced; else return (lambda G0, H0 / lambda)
  std::uint64_t seed = 0;         // used by the random strategy and rank padding
};

struct InitResult {
  FactoredPoint x0;
  /// Set when the adjoint image had numerical rank below k and the missing
  /// directions were padded with small random ones.
  bool rank_padded = false;
};

/// Spectral initialization: rank-k truncation of A*(observations), split
/// into balanced factors G0 = U sqrt(S), H0 = V sqrt(S) (equal Frobenius
/// norms), optionally unbalanced by lambda.
InitResult initialize(const problems::ProblemInstance& inst, const InitSpec& init, int k);

}  // namespace qprecon::io
