#pragma once

#include "qprecon/types.hpp"

#include <array>
#include <cstdint>
#include <variant>

namespace qprecon::problems {

/// Dense sensing block Phi of shape d x (m*n); row i holds vec(Phi_i) with
/// the column-major vec convention, so Phi(X) = Phi * vec(X).
struct GaussianSensing {
  Matrix phi;
  int m = 0;
  int n = 0;
  int d() const { return static_cast<int>(phi.rows()); }
};

/// Entry-wise sampling: the operator is (1/p) P_Omega where P_Omega keeps
/// the entries on the index set and zeroes the rest.
struct EntrySampling {
  SparseCoord pattern;  // values ignored, indices define Omega
  double rate = 0.0;    // p = |Omega| / (m n)
};

/// Identity operator; every entry observed. Used for closed-form toys and
/// theory checks.
struct FullObservation {};

using MeasurementOperator = std::variant<GaussianSensing, EntrySampling, FullObservation>;

/// A noiseless recovery instance: minimize
///   f(X) = 1/2 <X, A(X)> - <B, X>,  B = A(Mstar),
/// over rank-k factored X = G H^T, where A is the measurement operator.
struct ProblemInstance {
  MeasurementOperator op;
  FactoredPoint mstar;                             // ground truth factors
  std::variant<std::monostate, Vector, SparseCoord> observed;  // b (sensing) or P_Omega(Mstar)
  int m = 0, n = 0, k = 0;
};

ProblemInstance make_full_observation(FactoredPoint mstar_factors);
ProblemInstance make_entry_sampling(FactoredPoint mstar_factors, const SparseCoord& omega_pattern);
ProblemInstance make_gaussian_sensing(FactoredPoint mstar_factors, Matrix phi);

/// Objective value at x, in the shifted form whose minimum is
/// -1/2 <A(Mstar), Mstar> (negative). For entry sampling this touches only
/// the observed entries, cost O(|Omega| k).
double objective(const ProblemInstance& inst, const FactoredPoint& x);

/// The nonnegative part 1/2 <X - Mstar, A(X - Mstar)> = objective + shift.
/// Differences of this quantity stay accurate near the optimum (both terms
/// vanish there), so line searches compare it instead of the shifted value.
double quadratic_part(const ProblemInstance& inst, const FactoredPoint& x);

/// 1/2 <A(Mstar), Mstar>, the constant between the two forms above.
double objective_shift(const ProblemInstance& inst);

/// Euclidean partial derivatives (S H, S^T G) with S = A(X) - B the ambient
/// gradient; S stays sparse for entry sampling.
TangentPair euclid_partials(const ProblemInstance& inst, const FactoredPoint& x);

/// Ambient Euclidean gradient A(X - Mstar) as a dense matrix; a
/// verification path, not used by the solvers.
Matrix ambient_euclid_grad(const ProblemInstance& inst, const AmbientFactorization& amb);

/// Apply the measurement operator to a dense matrix. Self-adjoint and
/// positive semidefinite in the Frobenius inner product.
Matrix apply_A(const MeasurementOperator& op, const Matrix& z);

/// The familiar residual magnitude for monitoring: ||Phi(X) - b||_2 for
/// sensing, ||P_Omega(X - Mstar)||_F for sampling, ||X - Mstar||_F for full
/// observation (without the 1/p scaling).
double residual_norm(const ProblemInstance& inst, const FactoredPoint& x);

/// ||X - Mstar||_F, computed from a dense difference of the factored forms.
double recovery_error(const ProblemInstance& inst, const FactoredPoint& x);

/// Coefficients of the exact quartic t -> objective(x + t * dir),
/// c[0] + c[1] t + c[2] t^2 + c[3] t^3 + c[4] t^4. Exact because the
/// objective is quadratic in X and X(t) is quadratic in t.
std::array<double, 5> line_quartic(const ProblemInstance& inst, const FactoredPoint& x,
                                   const TangentPair& dir);

/// Power-iteration estimate of the operator norm of A (a few iterations on
/// a dense iterate); used to size initial trial steps.
double operator_norm_estimate(const MeasurementOperator& op, int m, int n, int iters,
                              std::uint64_t seed);

/// Adjoint image of the observations, A*(b): the matrix whose dominant
/// rank-k part seeds the spectral initialization.
Matrix adjoint_of_observations(const ProblemInstance& inst);

}  // namespace qprecon::problems
