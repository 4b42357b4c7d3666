#pragma once

#include "qprecon/problems.hpp"
#include "qprecon/solvers.hpp"
#include "qprecon/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace qprecon::analysis {

/// Empirical restricted-positive-definiteness estimate: the sampled extreme
/// values of the quotient <Z, A(Z)> / ||Z||^2 over low-rank test matrices.
/// Sampling can only under-estimate the true constant.
struct RpdEstimate {
  double beta_hat = 0.0;
  int samples = 0;
  int rank_tested = 0;
  double min_quotient = 1.0;
  double max_quotient = 1.0;
};

/// Quotient extremes of the measurement quadratic form over random rank-r
/// matrices Z (and, when a ground truth is supplied, over differences
/// X - Mstar with X random rank-r near and far from Mstar).
RpdEstimate estimate_rpd(const problems::MeasurementOperator& op, int m, int n,
                         const std::optional<AmbientFactorization>& mstar, int rank, int samples,
                         std::uint64_t seed);

struct RayleighRange {
  double min_quotient = 0.0;
  double max_quotient = 0.0;
  int samples = 0;
};

/// Rayleigh quotients <A(Z), Z> / ||Z||^2 of the quadratic-part Hessian at
/// the ground truth, sampled over random tangent directions at Mstar.
RayleighRange hessian_rayleigh(const problems::ProblemInstance& inst, int samples,
                               std::uint64_t seed);

/// Smallest mu such that every row of U is bounded by sqrt(mu k / m) and
/// every row of V by sqrt(mu k / n); always >= 1, and = 1 only for
/// perfectly flat singular vectors.
double incoherence(const AmbientFactorization& amb);

struct McIncoherenceParams {
  double mu = 1.0;
  double c_star = 2.0;  // > 1
  double c2 = 1.0;      // in [1/sqrt(m), 1]
};

struct TheoryConstants {
  double lipschitz = 1.0;
  double sigma_min_star = 0.0;
  double sigma_max_star = 0.0;
  double beta = 0.0;
  double delta = 0.0;
  double sigma_min_xt = 0.0;
  double nu_tilde = 0.0;       // 2 (1 - beta - delta L / sigma_min_star)
  /// Conservative coercivity constant 1 - 2 beta - delta L / sigma_min_star.
  /// The operator V_X acts as the identity (not 2I) on off-core tangent
  /// directions, which halves the safe lower bound on <grad f, X - Mstar>;
  /// measured contraction rates respect kappa built from this constant but
  /// can violate the optimistic one built from nu_tilde.
  double nu_conservative = 0.0;
  double delta_max = 0.0;      // (1 - beta) sigma_min_star / L
  double c_delta_t = 0.0;      // 4 L^2 + delta L^2 (4L + 2 + delta) / sigma_min(X_t)
  double theta_max = 0.0;      // min(1, 2 nu_tilde / c_delta_t)
  bool region_violated = false;  // delta >= delta_max
  std::optional<double> mc_delta_max;  // completion-specific radius cap

  /// Per-step squared-error contraction coefficient for stepsize theta.
  double kappa(double theta) const { return 1.0 - theta * (2.0 * nu_tilde - c_delta_t * theta); }

  /// Same coefficient built from the conservative coercivity constant.
  double kappa_conservative(double theta) const {
    return 1.0 - theta * (2.0 * nu_conservative - c_delta_t * theta);
  }
};

struct TheoryOptions {
  std::optional<double> lipschitz_override;
  std::optional<double> beta_2k;  // rank-2k RPD estimate feeding L = 1 + beta_2k
  std::optional<McIncoherenceParams> mc;
};

/// Closed-form local-convergence constants for the given RPD level beta and
/// neighborhood radius delta, with sigma_min evaluated at the current
/// iterate. L defaults to 1 + beta_2k (or 1 + beta when no rank-2k estimate
/// is supplied).
TheoryConstants theory_constants(const problems::ProblemInstance& inst, double beta, double delta,
                                 double sigma_min_xt, const TheoryOptions& opts = {});

struct McRpdReport {
  int requested = 0;
  int accepted = 0;   // samples inside the incoherence-restricted ball
  int passed = 0;     // accepted samples with quotient in [1/3, 2]
  int rejected = 0;   // rejection-sampling discards
  double min_quotient = 0.0;
  double max_quotient = 0.0;
  double pass_fraction = 0.0;
};

/// Spot-check of the two-sided sampling bound
///   1/3 ||X - Mstar||^2 <= (1/p) ||P_Omega(X - Mstar)||^2 <= 2 ||X - Mstar||^2
/// over random rank-k matrices inside the delta-ball around Mstar whose row
/// norms obey the C1-incoherence caps (enforced by rejection). This is a
/// probabilistic statement, so the report carries fractions, not verdicts.
McRpdReport mc_rpd_check(const problems::ProblemInstance& inst, int samples, double c1, double mu,
                         double delta, std::uint64_t seed);

/// Ratios e_{t+1} / e_t of the recovery-error column of a trace.
/// Throws std::invalid_argument on fewer than 3 usable records.
std::vector<double> contraction_profile(const std::vector<solvers::TraceRecord>& trace);

/// Max ratio over the final quartile of a contraction profile.
double final_quartile_max(const std::vector<double>& ratios);

/// Largest observed ||A(Z)|| / ||Z|| over random rank-r matrices; an
/// empirical lower bound on the operator norm restricted to low-rank
/// directions.
double opnorm_lowrank_estimate(const problems::MeasurementOperator& op, int m, int n, int rank,
                               int samples, std::uint64_t seed);

}  // namespace qprecon::analysis
