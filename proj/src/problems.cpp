#include "qprecon/problems.hpp"

#include "qprecon/linalg.hpp"
#include "qprecon/geometry.hpp"
#include "qprecon/rng.hpp"

#include <cmath>

namespace qprecon::problems {

namespace {

Eigen::Map<const Vector> as_vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unvec(const Vector& v, int rows, int cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

void check_point(const ProblemInstance& inst, const FactoredPoint& x) {
  if (x.rows() != inst.m || x.cols() != inst.n)
    throw std::invalid_argument("problem/point dimension mismatch");
}

// Values of G H^T on the sampling pattern, visited in storage order.
void product_on_pattern(const SparseCoord& pattern, const Matrix& g, const Matrix& h,
                        std::vector<double>& out) {
  out.resize(pattern.nnz());
  std::size_t t = 0;
  for (const auto& e : pattern.entries()) out[t++] = g.row(e.row).dot(h.row(e.col));
}

}  // namespace

ProblemInstance make_full_observation(FactoredPoint mstar_factors) {
  ProblemInstance inst;
  inst.m = mstar_factors.rows();
  inst.n = mstar_factors.cols();
  inst.k = mstar_factors.rank();
  inst.mstar = std::move(mstar_factors);
  inst.op = FullObservation{};
  return inst;
}

ProblemInstance make_entry_sampling(FactoredPoint mstar_factors, const SparseCoord& omega_pattern) {
  ProblemInstance inst;
  inst.m = mstar_factors.rows();
  inst.n = mstar_factors.cols();
  inst.k = mstar_factors.rank();
  if (omega_pattern.rows() != inst.m || omega_pattern.cols() != inst.n)
    throw std::invalid_argument("make_entry_sampling: pattern dimensions mismatch");
  if (omega_pattern.nnz() == 0) throw std::invalid_argument("make_entry_sampling: empty pattern");

  std::vector<Triplet> observed = omega_pattern.entries();
  for (auto& e : observed) e.value = mstar_factors.G.row(e.row).dot(mstar_factors.H.row(e.col));
  inst.observed = SparseCoord(inst.m, inst.n, std::move(observed));

  EntrySampling op;
  op.pattern = omega_pattern.pattern_only();
  op.rate = static_cast<double>(omega_pattern.nnz()) / (static_cast<double>(inst.m) * inst.n);
  inst.op = std::move(op);
  inst.mstar = std::move(mstar_factors);
  return inst;
}

ProblemInstance make_gaussian_sensing(FactoredPoint mstar_factors, Matrix phi) {
  ProblemInstance inst;
  inst.m = mstar_factors.rows();
  inst.n = mstar_factors.cols();
  inst.k = mstar_factors.rank();
  if (phi.cols() != static_cast<long>(inst.m) * inst.n)
    throw std::invalid_argument("make_gaussian_sensing: phi column count must be m*n");
  const Matrix mstar_dense = mstar_factors.product();
  inst.observed = Vector(phi * as_vec(mstar_dense));
  GaussianSensing op;
  op.m = inst.m;
  op.n = inst.n;
  op.phi = std::move(phi);
  inst.op = std::move(op);
  inst.mstar = std::move(mstar_factors);
  return inst;
}

double quadratic_part(const ProblemInstance& inst, const FactoredPoint& x) {
  check_point(inst, x);
  if (std::holds_alternative<FullObservation>(inst.op)) {
    const Matrix diff = x.product() - inst.mstar.product();
    return 0.5 * diff.squaredNorm();
  }
  if (const auto* es = std::get_if<EntrySampling>(&inst.op)) {
    const auto& obs = std::get<SparseCoord>(inst.observed);
    double resid_sq = 0.0;
    for (const auto& e : obs.entries()) {
      const double r = x.G.row(e.row).dot(x.H.row(e.col)) - e.value;
      resid_sq += r * r;
    }
    return resid_sq / (2.0 * es->rate);
  }
  const auto& gs = std::get<GaussianSensing>(inst.op);
  const auto& b = std::get<Vector>(inst.observed);
  const Matrix xd = x.product();
  const Vector resid = gs.phi * as_vec(xd) - b;
  return 0.5 * resid.squaredNorm();
}

double objective_shift(const ProblemInstance& inst) {
  if (std::holds_alternative<FullObservation>(inst.op))
    return 0.5 * inst.mstar.product().squaredNorm();
  if (const auto* es = std::get_if<EntrySampling>(&inst.op))
    return 0.5 * std::get<SparseCoord>(inst.observed).sum_of_squares() / es->rate;
  return 0.5 * std::get<Vector>(inst.observed).squaredNorm();
}

double objective(const ProblemInstance& inst, const FactoredPoint& x) {
  return quadratic_part(inst, x) - objective_shift(inst);
}

TangentPair euclid_partials(const ProblemInstance& inst, const FactoredPoint& x) {
  check_point(inst, x);
  TangentPair out = TangentPair::zero(inst.m, inst.n, x.rank());
  if (std::holds_alternative<FullObservation>(inst.op)) {
    // S = X - Mstar applied to the factors without forming S
    out.dG = x.G * linalg::gram(x.H) - inst.mstar.G * (inst.mstar.H.transpose() * x.H);
    out.dH = x.H * linalg::gram(x.G) - inst.mstar.H * (inst.mstar.G.transpose() * x.G);
    return out;
  }
  if (const auto* es = std::get_if<EntrySampling>(&inst.op)) {
    const auto& obs = std::get<SparseCoord>(inst.observed);
    const double inv_p = 1.0 / es->rate;
    for (const auto& e : obs.entries()) {
      const double s = inv_p * (x.G.row(e.row).dot(x.H.row(e.col)) - e.value);
      out.dG.row(e.row) += s * x.H.row(e.col);
      out.dH.row(e.col) += s * x.G.row(e.row);
    }
    return out;
  }
  const auto& gs = std::get<GaussianSensing>(inst.op);
  const auto& b = std::get<Vector>(inst.observed);
  const Matrix xd = x.product();
  const Vector resid = gs.phi * as_vec(xd) - b;
  const Matrix s = unvec(gs.phi.transpose() * resid, inst.m, inst.n);
  out.dG = s * x.H;
  out.dH = s.transpose() * x.G;
  return out;
}

Matrix ambient_euclid_grad(const ProblemInstance& inst, const AmbientFactorization& amb) {
  if (amb.rows() != inst.m || amb.cols() != inst.n)
    throw std::invalid_argument("ambient_euclid_grad: dimension mismatch");
  const Matrix x = amb.to_dense();
  if (std::holds_alternative<FullObservation>(inst.op)) return x - inst.mstar.product();
  if (const auto* es = std::get_if<EntrySampling>(&inst.op)) {
    const auto& obs = std::get<SparseCoord>(inst.observed);
    Matrix s = Matrix::Zero(inst.m, inst.n);
    const double inv_p = 1.0 / es->rate;
    for (const auto& e : obs.entries()) s(e.row, e.col) = inv_p * (x(e.row, e.col) - e.value);
    return s;
  }
  const auto& gs = std::get<GaussianSensing>(inst.op);
  const auto& b = std::get<Vector>(inst.observed);
  const Vector resid = gs.phi * as_vec(x) - b;
  return unvec(gs.phi.transpose() * resid, inst.m, inst.n);
}

Matrix apply_A(const MeasurementOperator& op, const Matrix& z) {
  if (std::holds_alternative<FullObservation>(op)) return z;
  if (const auto* es = std::get_if<EntrySampling>(&op)) {
    if (z.rows() != es->pattern.rows() || z.cols() != es->pattern.cols())
      throw std::invalid_argument("apply_A: shape mismatch");
    Matrix out = Matrix::Zero(z.rows(), z.cols());
    const double inv_p = 1.0 / es->rate;
    for (const auto& e : es->pattern.entries()) out(e.row, e.col) = inv_p * z(e.row, e.col);
    return out;
  }
  const auto& gs = std::get<GaussianSensing>(op);
  if (z.rows() != gs.m || z.cols() != gs.n) throw std::invalid_argument("apply_A: shape mismatch");
  return unvec(gs.phi.transpose() * (gs.phi * as_vec(z)), gs.m, gs.n);
}

double residual_norm(const ProblemInstance& inst, const FactoredPoint& x) {
  check_point(inst, x);
  if (std::holds_alternative<FullObservation>(inst.op))
    return (x.product() - inst.mstar.product()).norm();
  if (std::holds_alternative<EntrySampling>(inst.op)) {
    const auto& obs = std::get<SparseCoord>(inst.observed);
    double acc = 0.0;
    for (const auto& e : obs.entries()) {
      const double r = x.G.row(e.row).dot(x.H.row(e.col)) - e.value;
      acc += r * r;
    }
    return std::sqrt(acc);
  }
  const auto& gs = std::get<GaussianSensing>(inst.op);
  const auto& b = std::get<Vector>(inst.observed);
  const Matrix xd = x.product();
  return (gs.phi * as_vec(xd) - b).norm();
}

double recovery_error(const ProblemInstance& inst, const FactoredPoint& x) {
  check_point(inst, x);
  return (x.product() - inst.mstar.product()).norm();
}

std::array<double, 5> line_quartic(const ProblemInstance& inst, const FactoredPoint& x,
                                   const TangentPair& dir) {
  check_point(inst, x);
  // X(t) = X + t D1 + t^2 D2 with D1 = G dH^T + dG H^T, D2 = dG dH^T, and
  // f(X) = 1/2 <X - M, A(X - M)> - 1/2 <M, A(M)>; expand the quadratic form.
  std::array<double, 5> c{};
  double a00, a01, a11, a02, a12, a22, shift;

  if (std::holds_alternative<FullObservation>(inst.op)) {
    const Matrix r0 = x.product() - inst.mstar.product();
    const Matrix d1 = geometry::differential_of_product(x, dir);
    const Matrix d2 = dir.dG * dir.dH.transpose();
    a00 = r0.squaredNorm();
    a01 = linalg::frob_inner(r0, d1);
    a11 = d1.squaredNorm();
    a02 = linalg::frob_inner(r0, d2);
    a12 = linalg::frob_inner(d1, d2);
    a22 = d2.squaredNorm();
    shift = -0.5 * inst.mstar.product().squaredNorm();
  } else if (const auto* es = std::get_if<EntrySampling>(&inst.op)) {
    const auto& obs = std::get<SparseCoord>(inst.observed);
    std::vector<double> r0, d1, d2;
    product_on_pattern(obs, x.G, x.H, r0);
    {
      std::size_t t = 0;
      for (const auto& e : obs.entries()) r0[t++] -= e.value;
    }
    d1.resize(obs.nnz());
    d2.resize(obs.nnz());
    std::size_t t = 0;
    for (const auto& e : obs.entries()) {
      d1[t] = x.G.row(e.row).dot(dir.dH.row(e.col)) + dir.dG.row(e.row).dot(x.H.row(e.col));
      d2[t] = dir.dG.row(e.row).dot(dir.dH.row(e.col));
      ++t;
    }
    const double inv_p = 1.0 / es->rate;
    auto dot = [inv_p](const std::vector<double>& a, const std::vector<double>& b) {
      double acc = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
      return inv_p * acc;
    };
    a00 = dot(r0, r0);
    a01 = dot(r0, d1);
    a11 = dot(d1, d1);
    a02 = dot(r0, d2);
    a12 = dot(d1, d2);
    a22 = dot(d2, d2);
    shift = -0.5 * inv_p * obs.sum_of_squares();
  } else {
    const auto& gs = std::get<GaussianSensing>(inst.op);
    const auto& b = std::get<Vector>(inst.observed);
    const Matrix xd = x.product();
    const Matrix d1m = geometry::differential_of_product(x, dir);
    const Matrix d2m = dir.dG * dir.dH.transpose();
    const Vector y0 = gs.phi * as_vec(xd) - b;
    const Vector y1 = gs.phi * as_vec(d1m);
    const Vector y2 = gs.phi * as_vec(d2m);
    a00 = y0.squaredNorm();
    a01 = y0.dot(y1);
    a11 = y1.squaredNorm();
    a02 = y0.dot(y2);
    a12 = y1.dot(y2);
    a22 = y2.squaredNorm();
    shift = -0.5 * b.squaredNorm();
  }

  c[0] = 0.5 * a00 + shift;
  c[1] = a01;
  c[2] = 0.5 * a11 + a02;
  c[3] = a12;
  c[4] = 0.5 * a22;
  return c;
}

double operator_norm_estimate(const MeasurementOperator& op, int m, int n, int iters,
                              std::uint64_t seed) {
  Rng rng(seed);
  Matrix z = rng.gaussian_matrix(m, n);
  double est = 1.0;
  for (int i = 0; i < iters; ++i) {
    const double nz = z.norm();
    if (nz < 1e-300) return est;
    z /= nz;
    z = apply_A(op, z);
    est = z.norm();
  }
  return est;
}

Matrix adjoint_of_observations(const ProblemInstance& inst) {
  if (std::holds_alternative<FullObservation>(inst.op)) return inst.mstar.product();
  if (const auto* es = std::get_if<EntrySampling>(&inst.op)) {
    const auto& obs = std::get<SparseCoord>(inst.observed);
    Matrix out = Matrix::Zero(inst.m, inst.n);
    const double inv_p = 1.0 / es->rate;
    for (const auto& e : obs.entries()) out(e.row, e.col) = inv_p * e.value;
    return out;
  }
  const auto& gs = std::get<GaussianSensing>(inst.op);
  const auto& b = std::get<Vector>(inst.observed);
  return unvec(gs.phi.transpose() * b, inst.m, inst.n);
}

}  // namespace qprecon::problems
