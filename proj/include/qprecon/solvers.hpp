#pragma once

#include "qprecon/problems.hpp"
#include "qprecon/types.hpp"

#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace qprecon::solvers {

enum class Method { Rgd, Rcg, Egd, Ecg };

enum class StepRule { Armijo, LineMin, Rbb1, Rbb2, Rbb1NoLs, Rbb2NoLs, Fixed };

struct SolverConfig {
  Method method = Method::Rgd;
  StepRule step_rule = StepRule::Armijo;
  double fixed_theta = 1.0;   // used by StepRule::Fixed
  double armijo_sigma = 1e-4;
  double backtrack_beta = 0.5;
  int max_backtracks = 50;
  double grad_tol = 1e-8;
  bool grad_tol_relative = false;  // measure against the norm at x0
  long max_iters = 5000;
  double max_seconds = std::numeric_limits<double>::infinity();
  /// Stop when ||X - Mstar||_F / ||Mstar||_F falls below this (absolute
  /// when Mstar is zero).
  std::optional<double> rmse_target;
  std::uint64_t seed = 0;
  /// Recovery error / RMSE tracking per iteration; disable for pure
  /// per-iteration timing runs.
  bool track_recovery = true;
  /// Optional per-iteration observer (called after each accepted step and
  /// once for the initial point).
  std::function<void(long iter, const FactoredPoint&)> on_iterate;
};

struct TraceRecord {
  long iter = 0;
  double wall_seconds = 0.0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double recovery_error = 0.0;
  std::optional<double> test_rmse;
  double stepsize = 0.0;
  int backtracks = 0;
  std::optional<std::array<double, 3>> rbb;  // SS, SY, YY at this step
};

enum class Status {
  GradToleranceReached,
  MaxIters,
  MaxTime,
  RmseReached,
  RankDrop,
  LinesearchFailed,
};

const char* status_name(Status s);

struct SolveResult {
  FactoredPoint x;
  Status status = Status::MaxIters;
  std::vector<TraceRecord> trace;
};

/// Gradient descent in the factor space under the preconditioned metric,
/// with the identity retraction x <- x + theta * eta.
SolveResult rgd_solve(const problems::ProblemInstance& inst, const FactoredPoint& x0,
                      SolverConfig cfg);

/// Conjugate gradient variant; directions combined with a nonnegative
/// Hestenes-Stiefel coefficient and reset to steepest descent whenever the
/// combination stops being a descent direction.
SolveResult rcg_solve(const problems::ProblemInstance& inst, const FactoredPoint& x0,
                      SolverConfig cfg);

/// The same loops with raw Euclidean partials as the direction and the
/// Frobenius inner product throughout (baselines).
SolveResult egd_solve(const problems::ProblemInstance& inst, const FactoredPoint& x0,
                      SolverConfig cfg);
SolveResult ecg_solve(const problems::ProblemInstance& inst, const FactoredPoint& x0,
                      SolverConfig cfg);

/// Dispatch on cfg.method.
SolveResult solve(const problems::ProblemInstance& inst, const FactoredPoint& x0,
                  const SolverConfig& cfg);

class LinesearchError : public std::runtime_error {
 public:
  explicit LinesearchError(const std::string& what) : std::runtime_error(what) {}
};

struct ArmijoResult {
  double theta = 0.0;
  int backtracks = 0;
};

/// Backtracking line search: the smallest l >= 0 such that theta = theta0 *
/// beta^l satisfies
///   fbar(x) - fbar(x + theta * dir) >= sigma * theta * descent_inner,
/// where descent_inner = g(-grad, dir) must be positive. Throws
/// LinesearchError after max_backtracks rejections.
ArmijoResult armijo_search(const std::function<double(const FactoredPoint&)>& fbar,
                           const FactoredPoint& x, const TangentPair& dir, double descent_inner,
                           double theta0, double sigma, double beta, int max_backtracks);

struct LineMinResult {
  double theta = 0.0;
  bool degenerate = false;  // direction (numerically) zero
};

/// Global minimizer over theta > 0 of the exact quartic t -> f(x + t dir);
/// the stationary cubic is solved by companion-matrix eigenvalues.
LineMinResult exact_linemin(const problems::ProblemInstance& inst, const FactoredPoint& x,
                            const TangentPair& dir);

enum class BbRule { Bb1, Bb2 };

struct RbbResult {
  std::optional<double> theta;  // empty when the curvature term degenerates
  double ss = 0.0;              // g(z, z)
  double sy = 0.0;              // g(z, y)
  double yy = 0.0;              // g(y, y)
};

/// Barzilai-Borwein trial steps from iterate and gradient differences,
///   BB1 = g(z,z)/|g(z,y)|,  BB2 = |g(z,y)|/g(y,y),
/// with z = x_t - x_prev, y = grad_t - grad_prev compared coordinate-wise
/// and the inner product taken at x_t (preconditioned or Euclidean).
RbbResult rbb_stepsize(const FactoredPoint& x_t, const FactoredPoint& x_prev,
                       const TangentPair& grad_t, const TangentPair& grad_prev, BbRule rule,
                       bool preconditioned_metric);

}  // namespace qprecon::solvers
