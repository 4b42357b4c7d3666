#include "qprecon/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace qprecon {

SparseCoord::SparseCoord(int rows, int cols, std::vector<Triplet> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("SparseCoord: dimensions must be positive");
  for (const auto& t : entries_) {
    if (t.row < 0 || t.row >= rows_ || t.col < 0 || t.col >= cols_)
      throw std::invalid_argument("SparseCoord: index (" + std::to_string(t.row) + "," +
                                  std::to_string(t.col) + ") out of range");
    if (!std::isfinite(t.value)) throw std::invalid_argument("SparseCoord: non-finite value");
  }
  std::sort(entries_.begin(), entries_.end(), [](const Triplet& a, const Triplet& b) {
    return a.col != b.col ? a.col < b.col : a.row < b.row;
  });
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (entries_[i].row == entries_[i - 1].row && entries_[i].col == entries_[i - 1].col)
      throw std::invalid_argument("SparseCoord: duplicate entry (" + std::to_string(entries_[i].row) +
                                  "," + std::to_string(entries_[i].col) + ")");
  }
}

double SparseCoord::sum_of_squares() const {
  double acc = 0.0;
  for (const auto& t : entries_) acc += t.value * t.value;
  return acc;
}

Matrix SparseCoord::to_dense() const {
  Matrix d = Matrix::Zero(rows_, cols_);
  for (const auto& t : entries_) d(t.row, t.col) = t.value;
  return d;
}

SparseCoord SparseCoord::pattern_only() const {
  std::vector<Triplet> zeroed = entries_;
  for (auto& t : zeroed) t.value = 0.0;
  return SparseCoord(rows_, cols_, std::move(zeroed));
}

}  // namespace qprecon

namespace qprecon::linalg {

namespace {

constexpr double kRankTol = 1e-14;  // sigma_k / sigma_1 below this is a rank drop

// Deterministic sign convention: the largest-magnitude entry of each left
// singular vector is made positive.
void fix_signs(Matrix& u, Matrix& v) {
  for (int j = 0; j < u.cols(); ++j) {
    int idx = 0;
    u.col(j).cwiseAbs().maxCoeff(&idx);
    if (u(idx, j) < 0) {
      u.col(j) = -u.col(j);
      v.col(j) = -v.col(j);
    }
  }
}

}  // namespace

Matrix gram(const Matrix& m) {
  if (m.cols() > m.rows()) throw std::invalid_argument("gram: expected a tall matrix");
  const int k = static_cast<int>(m.cols());
  Matrix g(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) {
      g(i, j) = m.col(i).dot(m.col(j));
      g(j, i) = g(i, j);
    }
  return g;
}

Matrix spd_solve(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols()) throw std::invalid_argument("spd_solve: A must be square");
  if (a.rows() != b.rows()) throw std::invalid_argument("spd_solve: dimension mismatch");
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success)
    throw RankDeficiencyError("spd_solve: Cholesky failed, matrix is not positive definite");
  return llt.solve(b);
}

AmbientFactorization product_svd(const Matrix& g, const Matrix& h) {
  if (g.cols() != h.cols()) throw std::invalid_argument("product_svd: factor ranks differ");
  const int k = static_cast<int>(g.cols());
  if (g.rows() < k || h.rows() < k)
    throw std::invalid_argument("product_svd: factors must be tall");

  Eigen::HouseholderQR<Matrix> qr_g(g), qr_h(h);
  const Matrix qg = qr_g.householderQ() * Matrix::Identity(g.rows(), k);
  const Matrix qh = qr_h.householderQ() * Matrix::Identity(h.rows(), k);
  const Matrix rg = qr_g.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const Matrix rh = qr_h.matrixQR().topRows(k).triangularView<Eigen::Upper>();

  Eigen::JacobiSVD<Matrix> core(rg * rh.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = core.singularValues();
  if (s(k - 1) <= kRankTol * s(0))
    throw RankDeficiencyError("product_svd: core is numerically rank deficient");

  AmbientFactorization fac;
  fac.u = qg * core.matrixU();
  fac.v = qh * core.matrixV();
  fac.s = s;
  fix_signs(fac.u, fac.v);
  return fac;
}

TruncatedSvd truncated_svd(const Matrix& m, int k) {
  if (k < 1 || k > std::min(m.rows(), m.cols()))
    throw std::invalid_argument("truncated_svd: rank out of range");
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();

  int avail = 0;
  while (avail < k && s(avail) > kRankTol * s(0)) ++avail;
  if (avail == 0) throw RankDeficiencyError("truncated_svd: matrix is numerically zero");

  TruncatedSvd out;
  out.full_requested_rank = (avail == k);
  out.factors.u = svd.matrixU().leftCols(avail);
  out.factors.v = svd.matrixV().leftCols(avail);
  out.factors.s = s.head(avail);
  fix_signs(out.factors.u, out.factors.v);
  return out;
}

TruncatedSvd truncated_svd(const SparseCoord& m, int k) { return truncated_svd(m.to_dense(), k); }

double frob_inner(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("frob_inner: shape mismatch");
  return a.cwiseProduct(b).sum();
}

double frob_norm(const Matrix& a) { return a.norm(); }

double max_row_norm(const Matrix& a) {
  double best = 0.0;
  for (int i = 0; i < a.rows(); ++i) best = std::max(best, a.row(i).norm());
  return best;
}

}  // namespace qprecon::linalg
