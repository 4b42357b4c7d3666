#include "qprecon/solvers.hpp"

#include "qprecon/geometry.hpp"
#include "qprecon/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>

namespace qprecon::solvers {

namespace {

using problems::ProblemInstance;

double clamp_step(double theta) { return std::clamp(theta, 1e-12, 1e12); }

struct IterState {
  FactoredPoint x;
  Matrix gtg, hth;  // Grams at x, used by the preconditioned metric
  TangentPair partials;
  TangentPair grad;
  double fval = 0.0;  // reported (shifted) objective
  double qval = 0.0;  // nonnegative quadratic part, used by line searches
  double grad_norm = 0.0;
};

double inner_at(const IterState& s, bool precon, const TangentPair& a, const TangentPair& b) {
  return precon ? geometry::metric_with_grams(s.gtg, s.hth, a, b) : geometry::euclid_inner(a, b);
}

IterState eval_state(const ProblemInstance& inst, FactoredPoint x, bool precon, double shift) {
  IterState s;
  s.x = std::move(x);
  s.qval = problems::quadratic_part(inst, s.x);
  s.fval = s.qval - shift;
  s.partials = problems::euclid_partials(inst, s.x);
  if (precon) {
    s.gtg = linalg::gram(s.x.G);
    s.hth = linalg::gram(s.x.H);
    s.grad.dG = linalg::spd_solve(s.hth, s.partials.dG.transpose()).transpose();
    s.grad.dH = linalg::spd_solve(s.gtg, s.partials.dH.transpose()).transpose();
    s.grad_norm = std::sqrt(std::max(0.0, geometry::metric_with_grams(s.gtg, s.hth, s.grad, s.grad)));
  } else {
    s.grad = s.partials;
    s.grad_norm = std::sqrt(std::max(0.0, geometry::euclid_inner(s.grad, s.grad)));
  }
  return s;
}

double initial_trial_step(const ProblemInstance& inst, std::uint64_t seed) {
  if (std::holds_alternative<problems::FullObservation>(inst.op)) return 1.0;
  const double op_norm = problems::operator_norm_estimate(inst.op, inst.m, inst.n, 5, seed ^ 0x9E3779B9ULL);
  return 1.0 / std::max(op_norm, 1e-12);
}

struct RunContext {
  const ProblemInstance& inst;
  const SolverConfig& cfg;
  bool precon;
  bool conjugate;
  std::chrono::steady_clock::time_point start;
  double mstar_norm;

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

TraceRecord make_record(const RunContext& ctx, const IterState& s, long iter, double stepsize,
                        int backtracks, const std::optional<std::array<double, 3>>& rbb) {
  TraceRecord r;
  r.iter = iter;
  r.wall_seconds = ctx.elapsed();
  r.objective = s.fval;
  r.grad_norm = s.grad_norm;
  r.stepsize = stepsize;
  r.backtracks = backtracks;
  r.rbb = rbb;
  if (ctx.cfg.track_recovery) {
    r.recovery_error = problems::recovery_error(ctx.inst, s.x);
    r.test_rmse = r.recovery_error / std::sqrt(static_cast<double>(ctx.inst.m) * ctx.inst.n);
  } else {
    r.recovery_error = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

bool rmse_reached(const RunContext& ctx, const TraceRecord& rec) {
  if (!ctx.cfg.rmse_target || !ctx.cfg.track_recovery) return false;
  const double denom = ctx.mstar_norm > 0.0 ? ctx.mstar_norm : 1.0;
  return rec.recovery_error / denom <= *ctx.cfg.rmse_target;
}

SolveResult run_solver(const ProblemInstance& inst, const FactoredPoint& x0, const SolverConfig& cfg,
                       bool precon, bool conjugate) {
  RunContext ctx{inst, cfg, precon, conjugate, std::chrono::steady_clock::now(),
                 linalg::frob_norm(inst.mstar.product())};
  const double shift = problems::objective_shift(inst);
  SolveResult res;

  IterState cur;
  try {
    cur = eval_state(inst, x0, precon, shift);
  } catch (const RankDeficiencyError&) {
    res.x = x0;
    res.status = Status::RankDrop;
    return res;
  }

  const double tol = cfg.grad_tol * (cfg.grad_tol_relative ? cur.grad_norm : 1.0);
  const long reset_period = std::max(1, std::min(inst.m, inst.n));

  res.trace.push_back(make_record(ctx, cur, 0, 0.0, 0, std::nullopt));
  if (cfg.on_iterate) cfg.on_iterate(0, cur.x);
  if (rmse_reached(ctx, res.trace.back())) {
    res.x = cur.x;
    res.status = Status::RmseReached;
    return res;
  }

  const bool bb_no_ls = cfg.step_rule == StepRule::Rbb1NoLs || cfg.step_rule == StepRule::Rbb2NoLs;
  const BbRule bb_rule = (cfg.step_rule == StepRule::Rbb1 || cfg.step_rule == StepRule::Rbb1NoLs)
                             ? BbRule::Bb1
                             : BbRule::Bb2;

  // Line searches compare the nonnegative quadratic part; the sufficient
  // decrease condition is unchanged (the shift cancels) but differences stay
  // resolvable near the optimum.
  auto fbar = [&](const FactoredPoint& p) { return problems::quadratic_part(inst, p); };

  FactoredPoint x_prev;
  TangentPair grad_prev, dir_prev;
  bool have_prev = false;
  double theta_prev = initial_trial_step(inst, cfg.seed);

  // Divergence watch for the no-linesearch BB variants.
  int grow_streak = 0;
  double grow_anchor = cur.fval;

  res.status = Status::MaxIters;
  for (long t = 0;;) {
    if (cur.grad_norm <= tol) {
      res.status = Status::GradToleranceReached;
      break;
    }
    if (t >= cfg.max_iters) {
      res.status = Status::MaxIters;
      break;
    }
    if (ctx.elapsed() > cfg.max_seconds) {
      res.status = Status::MaxTime;
      break;
    }

    // Search direction.
    TangentPair dir;
    if (conjugate && have_prev && (t % reset_period) != 0) {
      const TangentPair y = cur.grad - grad_prev;
      const double denom = inner_at(cur, precon, y, dir_prev);
      double beta_cg = 0.0;
      if (std::abs(denom) > 1e-300)
        beta_cg = std::max(0.0, inner_at(cur, precon, y, cur.grad) / denom);
      dir = -cur.grad + beta_cg * dir_prev;
      if (!(inner_at(cur, precon, dir, -cur.grad) > 0.0)) dir = -cur.grad;
    } else {
      dir = -cur.grad;
    }
    const double slope = inner_at(cur, precon, -cur.grad, dir);

    // Stepsize.
    double theta = 0.0;
    int backtracks = 0;
    std::optional<std::array<double, 3>> rbb_vals;
    try {
      switch (cfg.step_rule) {
        case StepRule::Fixed:
          theta = cfg.fixed_theta;
          break;
        case StepRule::LineMin: {
          const LineMinResult lm = exact_linemin(inst, cur.x, dir);
          if (lm.degenerate || !(lm.theta > 0.0))
            throw LinesearchError("exact line minimization degenerated");
          theta = lm.theta;
          break;
        }
        case StepRule::Armijo: {
          const double theta0 = have_prev ? clamp_step(theta_prev / cfg.backtrack_beta) : theta_prev;
          const ArmijoResult ar = armijo_search(fbar, cur.x, dir, slope, theta0, cfg.armijo_sigma,
                                                cfg.backtrack_beta, cfg.max_backtracks);
          theta = ar.theta;
          backtracks = ar.backtracks;
          break;
        }
        default: {  // BB rules
          double theta0 = theta_prev;
          if (have_prev) {
            const RbbResult rb = rbb_stepsize(cur.x, x_prev, cur.grad, grad_prev, bb_rule, precon);
            rbb_vals = {{rb.ss, rb.sy, rb.yy}};
            theta0 = rb.theta ? clamp_step(std::min(*rb.theta, 1e6)) : clamp_step(theta_prev);
          }
          if (bb_no_ls) {
            theta = std::min(theta0, 1e6);
          } else {
            const ArmijoResult ar = armijo_search(fbar, cur.x, dir, slope, theta0, cfg.armijo_sigma,
                                                  cfg.backtrack_beta, cfg.max_backtracks);
            theta = ar.theta;
            backtracks = ar.backtracks;
          }
          break;
        }
      }
    } catch (const LinesearchError&) {
      res.status = Status::LinesearchFailed;
      break;
    }

    // Identity-retraction update in the factor space.
    FactoredPoint next{cur.x.G + theta * dir.dG, cur.x.H + theta * dir.dH};
    IterState next_state;
    try {
      next_state = eval_state(inst, std::move(next), precon, shift);
    } catch (const RankDeficiencyError&) {
      res.status = Status::RankDrop;
      break;
    }
    if (!std::isfinite(next_state.qval) || !std::isfinite(next_state.grad_norm)) {
      res.status = Status::LinesearchFailed;
      break;
    }

    x_prev = std::move(cur.x);
    grad_prev = std::move(cur.grad);
    dir_prev = std::move(dir);
    have_prev = true;
    theta_prev = theta;
    cur = std::move(next_state);
    ++t;

    res.trace.push_back(make_record(ctx, cur, t, theta, backtracks, rbb_vals));
    if (cfg.on_iterate) cfg.on_iterate(t, cur.x);

    if (bb_no_ls) {
      if (cur.fval > res.trace[res.trace.size() - 2].objective) {
        if (grow_streak == 0) grow_anchor = res.trace[res.trace.size() - 2].objective;
        ++grow_streak;
      } else {
        grow_streak = 0;
      }
      if (grow_streak >= 10 && cur.fval - grow_anchor > 1e3 * std::max(1.0, std::abs(grow_anchor))) {
        res.status = Status::LinesearchFailed;
        break;
      }
    }

    if (rmse_reached(ctx, res.trace.back())) {
      res.status = Status::RmseReached;
      break;
    }
  }

  res.x = cur.x;
  return res;
}

}  // namespace

const char* status_name(Status s) {
  switch (s) {
    case Status::GradToleranceReached: return "grad_tolerance_reached";
    case Status::MaxIters: return "max_iters";
    case Status::MaxTime: return "max_time";
    case Status::RmseReached: return "rmse_reached";
    case Status::RankDrop: return "rank_drop";
    case Status::LinesearchFailed: return "linesearch_failed";
  }
  return "unknown";
}

SolveResult rgd_solve(const ProblemInstance& inst, const FactoredPoint& x0, SolverConfig cfg) {
  cfg.method = Method::Rgd;
  return run_solver(inst, x0, cfg, true, false);
}

SolveResult rcg_solve(const ProblemInstance& inst, const FactoredPoint& x0, SolverConfig cfg) {
  cfg.method = Method::Rcg;
  return run_solver(inst, x0, cfg, true, true);
}

SolveResult egd_solve(const ProblemInstance& inst, const FactoredPoint& x0, SolverConfig cfg) {
  cfg.method = Method::Egd;
  return run_solver(inst, x0, cfg, false, false);
}

SolveResult ecg_solve(const ProblemInstance& inst, const FactoredPoint& x0, SolverConfig cfg) {
  cfg.method = Method::Ecg;
  return run_solver(inst, x0, cfg, false, true);
}

SolveResult solve(const ProblemInstance& inst, const FactoredPoint& x0, const SolverConfig& cfg) {
  switch (cfg.method) {
    case Method::Rgd: return rgd_solve(inst, x0, cfg);
    case Method::Rcg: return rcg_solve(inst, x0, cfg);
    case Method::Egd: return egd_solve(inst, x0, cfg);
    case Method::Ecg: return ecg_solve(inst, x0, cfg);
  }
  throw std::invalid_argument("solve: unknown method");
}

ArmijoResult armijo_search(const std::function<double(const FactoredPoint&)>& fbar,
                           const FactoredPoint& x, const TangentPair& dir, double descent_inner,
                           double theta0, double sigma, double beta, int max_backtracks) {
  if (!(descent_inner > 0.0))
    throw std::invalid_argument("armijo_search: direction is not a descent direction");
  if (!(theta0 > 0.0)) throw std::invalid_argument("armijo_search: theta0 must be positive");
  if (!(sigma > 0.0 && sigma < 1.0) || !(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("armijo_search: sigma and beta must lie in (0,1)");

  const double f0 = fbar(x);
  double theta = theta0;
  for (int l = 0; l <= max_backtracks; ++l) {
    const FactoredPoint cand{x.G + theta * dir.dG, x.H + theta * dir.dH};
    const double fc = fbar(cand);
    if (f0 - fc >= sigma * theta * descent_inner) return {theta, l};
    theta *= beta;
  }
  throw LinesearchError("armijo_search: no acceptable step within the backtracking budget");
}

LineMinResult exact_linemin(const ProblemInstance& inst, const FactoredPoint& x,
                            const TangentPair& dir) {
  const std::array<double, 5> c = problems::line_quartic(inst, x, dir);
  // Stationary points: c1 + 2 c2 t + 3 c3 t^2 + 4 c4 t^3 = 0.
  const double d0 = c[1], d1 = 2.0 * c[2], d2 = 3.0 * c[3], d3 = 4.0 * c[4];
  const double scale = std::max({std::abs(d0), std::abs(d1), std::abs(d2), std::abs(d3)});
  if (scale < 1e-300) return {0.0, true};

  auto g = [&c](double t) { return (((c[4] * t + c[3]) * t + c[2]) * t + c[1]) * t + c[0]; };
  auto gp = [&](double t) { return ((d3 * t + d2) * t + d1) * t + d0; };
  auto gpp = [&](double t) { return (3.0 * d3 * t + 2.0 * d2) * t + d1; };

  std::vector<double> roots;
  if (std::abs(d3) > 1e-14 * scale) {
    Matrix comp = Matrix::Zero(3, 3);
    comp(1, 0) = 1.0;
    comp(2, 1) = 1.0;
    comp(0, 2) = -d0 / d3;
    comp(1, 2) = -d1 / d3;
    comp(2, 2) = -d2 / d3;
    Eigen::EigenSolver<Matrix> es(comp);
    for (int i = 0; i < 3; ++i) {
      const auto ev = es.eigenvalues()(i);
      if (std::abs(ev.imag()) <= 1e-8 * std::max(1.0, std::abs(ev.real())))
        roots.push_back(ev.real());
    }
  } else if (std::abs(d2) > 1e-14 * scale) {
    const double disc = d1 * d1 - 4.0 * d2 * d0;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      roots.push_back((-d1 + sq) / (2.0 * d2));
      roots.push_back((-d1 - sq) / (2.0 * d2));
    }
  } else if (std::abs(d1) > 1e-14 * scale) {
    roots.push_back(-d0 / d1);
  }

  double best_t = 0.0;
  double best_g = std::numeric_limits<double>::infinity();
  for (double r : roots) {
    if (!(r > 0.0) || !std::isfinite(r)) continue;
    // Two Newton polish steps on the derivative.
    for (int it = 0; it < 2; ++it) {
      const double dd = gpp(r);
      if (std::abs(dd) < 1e-300) break;
      const double step = gp(r) / dd;
      if (!std::isfinite(step)) break;
      if (r - step > 0.0) r -= step;
    }
    const double val = g(r);
    if (val < best_g) {
      best_g = val;
      best_t = r;
    }
  }
  if (!(best_t > 0.0)) return {0.0, true};
  return {best_t, false};
}

RbbResult rbb_stepsize(const FactoredPoint& x_t, const FactoredPoint& x_prev,
                       const TangentPair& grad_t, const TangentPair& grad_prev, BbRule rule,
                       bool preconditioned_metric) {
  const TangentPair z{x_t.G - x_prev.G, x_t.H - x_prev.H};
  const TangentPair y = grad_t - grad_prev;

  RbbResult out;
  if (preconditioned_metric) {
    const Matrix gtg = linalg::gram(x_t.G);
    const Matrix hth = linalg::gram(x_t.H);
    out.ss = geometry::metric_with_grams(gtg, hth, z, z);
    out.sy = geometry::metric_with_grams(gtg, hth, z, y);
    out.yy = geometry::metric_with_grams(gtg, hth, y, y);
  } else {
    out.ss = geometry::euclid_inner(z, z);
    out.sy = geometry::euclid_inner(z, y);
    out.yy = geometry::euclid_inner(y, y);
  }

  // Nonpositive or vanishing curvature: no usable secant information.
  if (!(out.sy > 0.0) || std::abs(out.sy) < 1e-30) return out;
  out.theta = (rule == BbRule::Bb1) ? out.ss / std::abs(out.sy) : std::abs(out.sy) / out.yy;
  return out;
}

}  // namespace qprecon::solvers
