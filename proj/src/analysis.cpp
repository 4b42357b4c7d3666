#include "qprecon/analysis.hpp"

#include "qprecon/geometry.hpp"
#include "qprecon/linalg.hpp"
#include "qprecon/rng.hpp"

#include <algorithm>
#include <cmath>

namespace qprecon::analysis {

namespace {

using problems::EntrySampling;
using problems::FullObservation;
using problems::GaussianSensing;
using problems::MeasurementOperator;
using problems::ProblemInstance;

// Numerator <Z, A(Z)> and denominator <Z, Z>, accumulated entry by entry in
// the same (column-major) order. When A acts as the identity the two sums
// run over identical terms, so the quotient is exactly one.
std::pair<double, double> quadratic_form(const MeasurementOperator& op, const Matrix& z) {
  if (std::holds_alternative<FullObservation>(op)) {
    double acc = 0.0;
    for (long j = 0; j < z.cols(); ++j)
      for (long i = 0; i < z.rows(); ++i) acc += z(i, j) * z(i, j);
    return {acc, acc};
  }
  if (const auto* es = std::get_if<EntrySampling>(&op)) {
    double on_omega = 0.0;
    for (const auto& e : es->pattern.entries()) on_omega += z(e.row, e.col) * z(e.row, e.col);
    double den = 0.0;
    for (long j = 0; j < z.cols(); ++j)
      for (long i = 0; i < z.rows(); ++i) den += z(i, j) * z(i, j);
    return {on_omega / es->rate, den};
  }
  const auto& gs = std::get<GaussianSensing>(op);
  const Vector y = gs.phi * Eigen::Map<const Vector>(z.data(), z.size());
  return {y.squaredNorm(), z.squaredNorm()};
}

Matrix random_low_rank(Rng& rng, int m, int n, int rank) {
  return rng.gaussian_matrix(m, rank) * rng.gaussian_matrix(n, rank).transpose();
}

}  // namespace

RpdEstimate estimate_rpd(const MeasurementOperator& op, int m, int n,
                         const std::optional<AmbientFactorization>& mstar, int rank, int samples,
                         std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("estimate_rpd: samples must be >= 1");
  RpdEstimate est;
  est.samples = samples;
  est.rank_tested = rank;
  est.min_quotient = std::numeric_limits<double>::infinity();
  est.max_quotient = -std::numeric_limits<double>::infinity();

  const Matrix mstar_dense = mstar ? mstar->to_dense() : Matrix();
  // Perturbation radii relative to the largest singular value, probing both
  // the far field and the near field around the ground truth.
  const double radii[] = {1e-3, 1e-1, 1.0, 10.0};

  for (int i = 0; i < samples; ++i) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
    Matrix z;
    if (mstar && (i % 2 == 1)) {
      // Difference form: Z = X - Mstar with X a retracted tangent
      // perturbation of the ground truth.
      const double radius = radii[(i / 2) % 4] * mstar->s(0);
      Matrix step = geometry::tangent_project(*mstar, rng.gaussian_matrix(m, n));
      const double norm = step.norm();
      if (norm < 1e-300) continue;
      step *= radius / norm;
      const auto trunc = linalg::truncated_svd(Matrix(mstar_dense + step), mstar->rank());
      z = trunc.factors.to_dense() - mstar_dense;
    } else {
      z = random_low_rank(rng, m, n, rank);
    }
    const auto [num, den] = quadratic_form(op, z);
    if (den < 1e-300) continue;
    const double q = num / den;
    est.min_quotient = std::min(est.min_quotient, q);
    est.max_quotient = std::max(est.max_quotient, q);
  }

  est.beta_hat = std::max({1.0 - est.min_quotient, est.max_quotient - 1.0, 0.0});
  return est;
}

RayleighRange hessian_rayleigh(const ProblemInstance& inst, int samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("hessian_rayleigh: samples must be >= 1");
  const AmbientFactorization amb = linalg::product_svd(inst.mstar.G, inst.mstar.H);

  RayleighRange range;
  range.samples = samples;
  range.min_quotient = std::numeric_limits<double>::infinity();
  range.max_quotient = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
    const Matrix z = geometry::tangent_project(amb, rng.gaussian_matrix(inst.m, inst.n));
    const auto [num, den] = quadratic_form(inst.op, z);
    if (den < 1e-300) continue;
    const double q = num / den;
    range.min_quotient = std::min(range.min_quotient, q);
    range.max_quotient = std::max(range.max_quotient, q);
  }
  return range;
}

double incoherence(const AmbientFactorization& amb) {
  const double k = static_cast<double>(amb.rank());
  const double mu_u = amb.rows() * std::pow(linalg::max_row_norm(amb.u), 2) / k;
  const double mu_v = amb.cols() * std::pow(linalg::max_row_norm(amb.v), 2) / k;
  return std::max(mu_u, mu_v);
}

TheoryConstants theory_constants(const ProblemInstance& inst, double beta, double delta,
                                 double sigma_min_xt, const TheoryOptions& opts) {
  if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("theory_constants: beta in [0,1)");
  if (!(delta >= 0.0)) throw std::invalid_argument("theory_constants: delta must be >= 0");

  TheoryConstants tc;
  tc.beta = beta;
  tc.delta = delta;
  tc.sigma_min_xt = sigma_min_xt;

  const AmbientFactorization amb = linalg::product_svd(inst.mstar.G, inst.mstar.H);
  tc.sigma_max_star = amb.s(0);
  tc.sigma_min_star = amb.s(amb.rank() - 1);

  tc.lipschitz = opts.lipschitz_override
                     ? *opts.lipschitz_override
                     : 1.0 + (opts.beta_2k ? *opts.beta_2k : beta);
  const double l = tc.lipschitz;

  tc.nu_tilde = 2.0 * (1.0 - beta - delta * l / tc.sigma_min_star);
  tc.nu_conservative = 1.0 - 2.0 * beta - delta * l / tc.sigma_min_star;
  tc.delta_max = (1.0 - beta) * tc.sigma_min_star / l;
  tc.c_delta_t = 4.0 * l * l +
                 (delta > 0.0 ? delta * (l * l * (4.0 * l + 2.0 + delta)) / sigma_min_xt : 0.0);
  tc.theta_max = tc.nu_tilde > 0.0 ? std::min(1.0, 2.0 * tc.nu_tilde / tc.c_delta_t) : 0.0;
  tc.region_violated = delta >= tc.delta_max;

  if (opts.mc) {
    const double k = static_cast<double>(inst.k);
    const double cap = (std::sqrt(2.0 * opts.mc->c_star * k) - 1.0) * tc.sigma_max_star *
                       std::sqrt(opts.mc->mu * k / inst.n) / opts.mc->c2;
    tc.mc_delta_max = std::min(tc.delta_max, cap);
  }
  return tc;
}

McRpdReport mc_rpd_check(const ProblemInstance& inst, int samples, double c1, double mu,
                         double delta, std::uint64_t seed) {
  const auto* es = std::get_if<EntrySampling>(&inst.op);
  if (!es) throw std::invalid_argument("mc_rpd_check: requires an entry-sampling instance");
  if (samples < 1) throw std::invalid_argument("mc_rpd_check: samples must be >= 1");

  const AmbientFactorization amb = linalg::product_svd(inst.mstar.G, inst.mstar.H);
  const Matrix mstar_dense = amb.to_dense();
  const double row_cap = c1 * std::sqrt(mu * inst.k / inst.m);
  const double col_cap = c1 * std::sqrt(mu * inst.k / inst.n);
  const double radii[] = {0.05, 0.15, 0.35, 0.7, 1.0};

  McRpdReport rep;
  rep.requested = samples;
  rep.min_quotient = std::numeric_limits<double>::infinity();
  rep.max_quotient = -std::numeric_limits<double>::infinity();

  const int max_attempts = 60 * samples;
  int attempt = 0;
  while (rep.accepted < samples && attempt < max_attempts) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(attempt));
    const double radius = radii[attempt % 5] * delta;
    ++attempt;

    Matrix step = geometry::tangent_project(amb, rng.gaussian_matrix(inst.m, inst.n));
    const double nstep = step.norm();
    if (nstep < 1e-300) continue;
    step *= radius / nstep;

    Matrix x;
    try {
      x = linalg::truncated_svd(Matrix(mstar_dense + step), inst.k).factors.to_dense();
    } catch (const RankDeficiencyError&) {
      ++rep.rejected;
      continue;
    }
    const Matrix diff = x - mstar_dense;
    const double dist = diff.norm();
    // Membership in the restricted neighborhood, enforced by rejection.
    if (dist > delta || dist <= 1e-14 * mstar_dense.norm() ||
        linalg::max_row_norm(x) > row_cap || linalg::max_row_norm(x.transpose()) > col_cap) {
      ++rep.rejected;
      continue;
    }

    const auto [num, den] = quadratic_form(inst.op, diff);
    if (den < 1e-300) {
      ++rep.rejected;
      continue;
    }
    const double q = num / den;
    ++rep.accepted;
    rep.min_quotient = std::min(rep.min_quotient, q);
    rep.max_quotient = std::max(rep.max_quotient, q);
    if (q >= 1.0 / 3.0 - 1e-12 && q <= 2.0 + 1e-12) ++rep.passed;
  }
  rep.pass_fraction = rep.accepted > 0 ? static_cast<double>(rep.passed) / rep.accepted : 0.0;
  return rep;
}

std::vector<double> contraction_profile(const std::vector<solvers::TraceRecord>& trace) {
  std::vector<double> errors;
  for (const auto& rec : trace)
    if (std::isfinite(rec.recovery_error) && rec.recovery_error > 0.0)
      errors.push_back(rec.recovery_error);
  if (errors.size() < 3)
    throw std::invalid_argument("contraction_profile: need at least 3 records with recovery error");
  std::vector<double> ratios(errors.size() - 1);
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) ratios[i] = errors[i + 1] / errors[i];
  return ratios;
}

double final_quartile_max(const std::vector<double>& ratios) {
  if (ratios.empty()) throw std::invalid_argument("final_quartile_max: empty profile");
  const std::size_t quartile = std::max<std::size_t>(1, (ratios.size() + 3) / 4);
  double best = 0.0;
  for (std::size_t i = ratios.size() - quartile; i < ratios.size(); ++i)
    best = std::max(best, ratios[i]);
  return best;
}

double opnorm_lowrank_estimate(const MeasurementOperator& op, int m, int n, int rank, int samples,
                               std::uint64_t seed) {
  double best = 0.0;
  for (int i = 0; i < samples; ++i) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
    const Matrix z = random_low_rank(rng, m, n, rank);
    const double nz = z.norm();
    if (nz < 1e-300) continue;
    best = std::max(best, problems::apply_A(op, z).norm() / nz);
  }
  return best;
}

}  // namespace qprecon::analysis
