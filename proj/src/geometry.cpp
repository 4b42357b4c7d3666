#include "qprecon/geometry.hpp"

#include "qprecon/linalg.hpp"

#include <Eigen/LU>

namespace qprecon::geometry {

namespace {

void check_shapes(const FactoredPoint& x, const TangentPair& xi) {
  if (xi.dG.rows() != x.G.rows() || xi.dG.cols() != x.G.cols() || xi.dH.rows() != x.H.rows() ||
      xi.dH.cols() != x.H.cols())
    throw std::invalid_argument("tangent pair shape does not match the base point");
}

}  // namespace

double metric_with_grams(const Matrix& gtg, const Matrix& hth, const TangentPair& xi,
                         const TangentPair& eta) {
  // tr(A W) = <A, W> for symmetric W
  const Matrix a1 = xi.dG.transpose() * eta.dG;
  const Matrix a2 = xi.dH.transpose() * eta.dH;
  return a1.cwiseProduct(hth).sum() + a2.cwiseProduct(gtg).sum();
}

double metric(const FactoredPoint& x, const TangentPair& xi, const TangentPair& eta) {
  check_shapes(x, xi);
  check_shapes(x, eta);
  return metric_with_grams(linalg::gram(x.G), linalg::gram(x.H), xi, eta);
}

double euclid_inner(const TangentPair& xi, const TangentPair& eta) {
  return linalg::frob_inner(xi.dG, eta.dG) + linalg::frob_inner(xi.dH, eta.dH);
}

TangentPair riemannian_gradient(const FactoredPoint& x, const TangentPair& partials) {
  check_shapes(x, partials);
  const Matrix gtg = linalg::gram(x.G);
  const Matrix hth = linalg::gram(x.H);
  TangentPair grad;
  grad.dG = linalg::spd_solve(hth, partials.dG.transpose()).transpose();
  grad.dH = linalg::spd_solve(gtg, partials.dH.transpose()).transpose();
  return grad;
}

FactoredPoint rebalance(const FactoredPoint& x, const BalancingTransform& f) {
  if (f.f.rows() != x.rank() || f.f.cols() != x.rank())
    throw std::invalid_argument("rebalance: transform size does not match rank");
  Eigen::FullPivLU<Matrix> lu(f.f.transpose());
  if (!lu.isInvertible()) throw std::invalid_argument("rebalance: singular transform");
  FactoredPoint out;
  // G F^{-1} = solve(F^T, G^T)^T
  out.G = lu.solve(x.G.transpose()).transpose();
  out.H = x.H * f.f.transpose();
  return out;
}

TangentPair transport_rebalanced(const TangentPair& xi, const BalancingTransform& f) {
  Eigen::FullPivLU<Matrix> lu(f.f.transpose());
  if (!lu.isInvertible()) throw std::invalid_argument("transport_rebalanced: singular transform");
  TangentPair out;
  out.dG = lu.solve(xi.dG.transpose()).transpose();
  out.dH = xi.dH * f.f.transpose();
  return out;
}

Matrix differential_of_product(const FactoredPoint& x, const TangentPair& xi) {
  check_shapes(x, xi);
  return x.G * xi.dH.transpose() + xi.dG * x.H.transpose();
}

Matrix v_operator(const AmbientFactorization& amb, const Matrix& z) {
  if (z.rows() != amb.rows() || z.cols() != amb.cols())
    throw std::invalid_argument("v_operator: shape mismatch");
  const Matrix utz = amb.u.transpose() * z;  // k x n
  const Matrix zv = z * amb.v;               // m x k
  return amb.u * utz + zv * amb.v.transpose();
}

Matrix tangent_project(const AmbientFactorization& amb, const Matrix& z) {
  if (z.rows() != amb.rows() || z.cols() != amb.cols())
    throw std::invalid_argument("tangent_project: shape mismatch");
  const Matrix utz = amb.u.transpose() * z;
  const Matrix zv = z * amb.v;
  // P_U Z + Z P_V - P_U Z P_V
  return amb.u * utz + (zv - amb.u * (utz * amb.v)) * amb.v.transpose();
}

Matrix induced_update(const AmbientFactorization& amb, const Matrix& euclid_grad, double theta) {
  if (theta < 0) throw std::invalid_argument("induced_update: theta must be nonnegative");
  if (euclid_grad.rows() != amb.rows() || euclid_grad.cols() != amb.cols())
    throw std::invalid_argument("induced_update: shape mismatch");
  const Matrix x = amb.to_dense();
  // grad X^+ grad = (grad V) Sigma^{-1} (U^T grad)
  const Matrix gv = euclid_grad * amb.v;
  const Matrix utg = amb.u.transpose() * euclid_grad;
  const Matrix second_order = gv * amb.s.cwiseInverse().asDiagonal() * utg;
  return x - theta * v_operator(amb, euclid_grad) + theta * theta * second_order;
}

}  // namespace qprecon::geometry
