#pragma once

#include "qprecon/types.hpp"

namespace qprecon::geometry {

/// The preconditioned inner product at x = (G, H):
///   g_x(xi, eta) = tr(xi_G^T eta_G (H^T H)) + tr(xi_H^T eta_H (G^T G)).
/// It weights each factor direction by the opposite factor's Gram matrix,
/// which makes the gradient flow approximate a Newton step for the
/// squared-loss objective.
double metric(const FactoredPoint& x, const TangentPair& xi, const TangentPair& eta);

/// Same inner product with precomputed Gram matrices G^T G and H^T H;
/// solvers cache the Grams per iterate.
double metric_with_grams(const Matrix& gtg, const Matrix& hth, const TangentPair& xi,
                         const TangentPair& eta);

/// Euclidean (Frobenius) inner product on tangent pairs.
double euclid_inner(const TangentPair& xi, const TangentPair& eta);

/// Gradient under the preconditioned metric, from the Euclidean partials:
/// (dG (H^T H)^{-1}, dH (G^T G)^{-1}). Throws RankDeficiencyError when a
/// Gram matrix is not positive definite.
TangentPair riemannian_gradient(const FactoredPoint& x, const TangentPair& partials);

/// Fiber move (G, H) -> (G F^{-1}, H F^T); the product G H^T is unchanged.
FactoredPoint rebalance(const FactoredPoint& x, const BalancingTransform& f);

/// Tangent transport matching `rebalance`: (dG, dH) -> (dG F^{-1}, dH F^T).
/// Chosen so that the differential of the product map is preserved,
/// D pi(x')[xi'] = D pi(x)[xi], which also makes the metric invariant.
TangentPair transport_rebalanced(const TangentPair& xi, const BalancingTransform& f);

/// D pi(x)[xi] = G dH^T + dG H^T, the ambient image of a tangent pair.
Matrix differential_of_product(const FactoredPoint& x, const TangentPair& xi);

/// V_X(Z) = P_U Z + Z P_V with P_U = U U^T, P_V = V V^T. Maps the ambient
/// Euclidean gradient to the induced gradient on the fixed-rank manifold.
Matrix v_operator(const AmbientFactorization& amb, const Matrix& z);

/// Orthogonal projection onto the tangent space of the fixed-rank manifold
/// at X: P_U Z + Z P_V - P_U Z P_V.
Matrix tangent_project(const AmbientFactorization& amb, const Matrix& z);

/// Closed-form ambient image of one gradient step taken in the factor
/// space: X_+ = X - theta V_X(grad) + theta^2 grad X^+ grad, with the
/// pseudoinverse applied through the SVD factors. This is a verification
/// device, not a computational path of the solvers.
Matrix induced_update(const AmbientFactorization& amb, const Matrix& euclid_grad, double theta);

}  // namespace qprecon::geometry
