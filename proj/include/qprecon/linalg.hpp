#pragma once

#include "qprecon/types.hpp"

namespace qprecon::linalg {

/// M^T M, computed on the upper triangle and mirrored so the result is
/// exactly symmetric.
Matrix gram(const Matrix& m);

/// Solve A X = B for symmetric positive definite A via Cholesky.
/// Throws RankDeficiencyError when the factorization fails, which signals
/// that a factor Gram matrix has (numerically) lost rank.
Matrix spd_solve(const Matrix& a, const Matrix& b);

/// Thin SVD of the product G H^T without ever forming the m x n matrix:
/// QR-factor both sides, SVD the k x k core R_G R_H^T. Cost O((m+n)k^2 + k^3).
AmbientFactorization product_svd(const Matrix& g, const Matrix& h);

struct TruncatedSvd {
  AmbientFactorization factors;
  /// False when the requested rank exceeded the numerical rank; in that
  /// case `factors` holds the available rank only.
  bool full_requested_rank = true;
};

/// Best rank-k approximation factors of a dense matrix.
TruncatedSvd truncated_svd(const Matrix& m, int k);
TruncatedSvd truncated_svd(const SparseCoord& m, int k);

double frob_inner(const Matrix& a, const Matrix& b);
double frob_norm(const Matrix& a);

/// Largest row 2-norm (the 2,infinity norm).
double max_row_norm(const Matrix& a);

}  // namespace qprecon::linalg
