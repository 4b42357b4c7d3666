#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace qprecon {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when a factor (or the core of a factored product) loses full
/// column rank, i.e. the iterate left the manifold of full-rank pairs.
class RankDeficiencyError : public std::runtime_error {
 public:
  explicit RankDeficiencyError(const std::string& what) : std::runtime_error(what) {}
};

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Sparse matrix in coordinate form. Entries are validated on construction
/// (indices in range, no duplicates, finite values) and kept sorted in
/// column-major order so that iteration order is deterministic.
class SparseCoord {
 public:
  SparseCoord() = default;
  SparseCoord(int rows, int cols, std::vector<Triplet> entries);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return entries_.size(); }
  const std::vector<Triplet>& entries() const { return entries_; }

  /// Sum of squared values, accumulated sequentially in storage order.
  double sum_of_squares() const;

  Matrix to_dense() const;

  /// Same pattern, values replaced by zeros.
  SparseCoord pattern_only() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Triplet> entries_;
};

/// A point (G, H) in the product space of full-column-rank factor pairs;
/// represents the rank-k matrix X = G H^T.
struct FactoredPoint {
  Matrix G;  // m x k
  Matrix H;  // n x k

  int rows() const { return static_cast<int>(G.rows()); }
  int cols() const { return static_cast<int>(H.rows()); }
  int rank() const { return static_cast<int>(G.cols()); }

  Matrix product() const { return G * H.transpose(); }
};

/// A tangent vector (dG, dH) at a FactoredPoint of matching shape.
struct TangentPair {
  Matrix dG;  // m x k
  Matrix dH;  // n x k

  static TangentPair zero(int m, int n, int k) {
    return {Matrix::Zero(m, k), Matrix::Zero(n, k)};
  }
};

inline TangentPair operator+(const TangentPair& a, const TangentPair& b) {
  return {a.dG + b.dG, a.dH + b.dH};
}
inline TangentPair operator-(const TangentPair& a, const TangentPair& b) {
  return {a.dG - b.dG, a.dH - b.dH};
}
inline TangentPair operator*(double s, const TangentPair& a) {
  return {s * a.dG, s * a.dH};
}
inline TangentPair operator-(const TangentPair& a) { return {-a.dG, -a.dH}; }

/// Thin SVD triple X = U diag(S) V^T with orthonormal U, V and strictly
/// positive singular values sorted in descending order.
struct AmbientFactorization {
  Matrix u;  // m x r, orthonormal columns
  Vector s;  // r, positive, descending
  Matrix v;  // n x r, orthonormal columns

  int rows() const { return static_cast<int>(u.rows()); }
  int cols() const { return static_cast<int>(v.rows()); }
  int rank() const { return static_cast<int>(s.size()); }

  Matrix to_dense() const { return u * s.asDiagonal() * v.transpose(); }
};

/// An invertible k x k fiber transformation (G, H) -> (G F^{-1}, H F^T).
struct BalancingTransform {
  Matrix f;
};

}  // namespace qprecon
