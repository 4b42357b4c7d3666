#pragma once

#include "qprecon/generate.hpp"
#include "qprecon/linalg.hpp"
#include "qprecon/problems.hpp"
#include "qprecon/rng.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

namespace qptest {

using namespace qprecon;

inline Matrix random_matrix(Rng& rng, int rows, int cols) { return rng.gaussian_matrix(rows, cols); }

/// Random matrix with orthonormal columns.
inline Matrix random_orthonormal(Rng& rng, int rows, int cols) {
  const Matrix a = rng.gaussian_matrix(rows, cols);
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(rows, cols);
}

/// Random invertible k x k transform with singular values in [lo, hi].
inline Matrix random_transform(Rng& rng, int k, double lo = 0.5, double hi = 2.0) {
  const Matrix q1 = random_orthonormal(rng, k, k);
  const Matrix q2 = random_orthonormal(rng, k, k);
  Vector d(k);
  for (int i = 0; i < k; ++i) d(i) = lo + (hi - lo) * rng.uniform01();
  return q1 * d.asDiagonal() * q2.transpose();
}

inline FactoredPoint random_point(Rng& rng, int m, int n, int k) {
  return {rng.gaussian_matrix(m, k), rng.gaussian_matrix(n, k)};
}

inline TangentPair random_tangent(Rng& rng, int m, int n, int k) {
  return {rng.gaussian_matrix(m, k), rng.gaussian_matrix(n, k)};
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

inline double rel_diff(const Matrix& got, const Matrix& want) {
  return (got - want).norm() / std::max(1e-300, want.norm());
}

/// Bernoulli sampling pattern (deterministic given rng state).
inline SparseCoord bernoulli_pattern(Rng& rng, int m, int n, double p) {
  std::vector<Triplet> entries;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i)
      if (rng.uniform01() < p) entries.push_back({i, j, 0.0});
  if (entries.empty()) entries.push_back({0, 0, 0.0});
  return SparseCoord(m, n, std::move(entries));
}

inline problems::ProblemInstance make_mc_instance(Rng& rng, int m, int n, int k, double p) {
  FactoredPoint mstar = random_point(rng, m, n, k);
  return problems::make_entry_sampling(std::move(mstar), bernoulli_pattern(rng, m, n, p));
}

inline problems::ProblemInstance make_cs_instance(Rng& rng, int m, int n, int k, int d) {
  FactoredPoint mstar = random_point(rng, m, n, k);
  Matrix phi = rng.gaussian_matrix(d, m * n);
  return problems::make_gaussian_sensing(std::move(mstar), std::move(phi));
}

inline problems::ProblemInstance make_full_instance(Rng& rng, int m, int n, int k) {
  return problems::make_full_observation(random_point(rng, m, n, k));
}

/// The desk-scale sensing instance used across analysis tests.
inline problems::ProblemInstance cs_desk_instance(std::uint64_t seed = 42) {
  Rng rng(seed);
  return make_cs_instance(rng, 20, 20, 2, 300);
}

}  // namespace qptest
