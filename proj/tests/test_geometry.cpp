#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_support.hpp"

#include "qprecon/geometry.hpp"
#include "qprecon/linalg.hpp"

using namespace qprecon;
using namespace qptest;

namespace {

// Dense trace reference for the weighted inner product.
double metric_oracle(const FactoredPoint& x, const TangentPair& xi, const TangentPair& eta) {
  const Matrix t1 = xi.dG.transpose() * eta.dG * (x.H.transpose() * x.H);
  const Matrix t2 = xi.dH.transpose() * eta.dH * (x.G.transpose() * x.G);
  return t1.trace() + t2.trace();
}

}  // namespace

TEST_CASE("metric: orthonormal factors reduce to the Frobenius pairing") {
  Rng rng(21);
  FactoredPoint x{random_orthonormal(rng, 6, 2), random_orthonormal(rng, 5, 2)};
  const TangentPair xi = random_tangent(rng, 6, 5, 2);
  const TangentPair eta = random_tangent(rng, 6, 5, 2);
  CHECK(rel_err(geometry::metric(x, xi, eta), geometry::euclid_inner(xi, eta)) <= 1e-12);
}

TEST_CASE("metric: scalar case by hand") {
  FactoredPoint x{Matrix::Ones(1, 1), Matrix::Ones(1, 1)};
  TangentPair xi{Matrix::Ones(1, 1), Matrix::Zero(1, 1)};
  CHECK(geometry::metric(x, xi, xi) == doctest::Approx(1.0));
}

TEST_CASE("metric matches the dense trace oracle; symmetric and positive") {
  Rng rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const FactoredPoint x = random_point(rng, 7, 5, 3);
    const TangentPair xi = random_tangent(rng, 7, 5, 3);
    const TangentPair eta = random_tangent(rng, 7, 5, 3);
    const double got = geometry::metric(x, xi, eta);
    CHECK(rel_err(got, metric_oracle(x, xi, eta)) <= 1e-12);
    CHECK(rel_err(got, geometry::metric(x, eta, xi)) <= 1e-12);
    CHECK(geometry::metric(x, xi, xi) > 0.0);
  }
}

TEST_CASE("riemannian_gradient: squared-norm objective gives back the point") {
  // For 1/2 ||G H^T||_F^2 the partials are (X H, X^T G) and the
  // preconditioned gradient collapses to (G, H).
  Rng rng(23);
  const FactoredPoint x = random_point(rng, 6, 4, 2);
  const Matrix xd = x.product();
  const TangentPair partials{xd * x.H, xd.transpose() * x.G};
  const TangentPair grad = geometry::riemannian_gradient(x, partials);
  CHECK(rel_diff(grad.dG, x.G) <= 1e-12);
  CHECK(rel_diff(grad.dH, x.H) <= 1e-12);

  const TangentPair zero = TangentPair::zero(6, 4, 2);
  const TangentPair gz = geometry::riemannian_gradient(x, zero);
  CHECK(gz.dG.norm() == 0.0);
  CHECK(gz.dH.norm() == 0.0);
}

TEST_CASE("riemannian_gradient satisfies the metric-duality identity") {
  Rng rng(24);
  for (int trial = 0; trial < 5; ++trial) {
    const FactoredPoint x = random_point(rng, 8, 6, 3);
    const TangentPair partials = random_tangent(rng, 8, 6, 3);
    const TangentPair grad = geometry::riemannian_gradient(x, partials);
    for (int probe = 0; probe < 20; ++probe) {
      const TangentPair xi = random_tangent(rng, 8, 6, 3);
      const double lhs = geometry::metric(x, grad, xi);
      const double rhs = geometry::euclid_inner(partials, xi);
      CHECK(rel_err(lhs, rhs) <= 1e-10);
    }
  }
}

TEST_CASE("rebalance preserves the product") {
  Rng rng(25);
  const FactoredPoint x = random_point(rng, 6, 5, 3);
  const Matrix x_dense = x.product();

  SUBCASE("identity") {
    const auto y = geometry::rebalance(x, {Matrix::Identity(3, 3)});
    CHECK(rel_diff(y.G, x.G) <= 1e-14);
    CHECK(rel_diff(y.H, x.H) <= 1e-14);
  }
  SUBCASE("scalar transform") {
    const auto y = geometry::rebalance(x, {3.0 * Matrix::Identity(3, 3)});
    CHECK(rel_diff(y.G, Matrix(x.G / 3.0)) <= 1e-14);
    CHECK(rel_diff(y.H, Matrix(3.0 * x.H)) <= 1e-14);
    CHECK(rel_diff(y.product(), x_dense) <= 1e-12);
  }
  SUBCASE("random transforms") {
    for (int trial = 0; trial < 10; ++trial) {
      const BalancingTransform f{random_transform(rng, 3, 0.3, 3.0)};
      const auto y = geometry::rebalance(x, f);
      CHECK(rel_diff(y.product(), x_dense) <= 1e-12);
    }
  }
  SUBCASE("singular transform rejected") {
    CHECK_THROWS_AS(geometry::rebalance(x, {Matrix::Zero(3, 3)}), std::invalid_argument);
  }
}

TEST_CASE("metric is invariant under rebalancing with transported tangents") {
  Rng rng(26);
  for (int trial = 0; trial < 10; ++trial) {
    const FactoredPoint x = random_point(rng, 7, 6, 2);
    const TangentPair xi = random_tangent(rng, 7, 6, 2);
    const TangentPair eta = random_tangent(rng, 7, 6, 2);
    const BalancingTransform f{random_transform(rng, 2, 0.25, 4.0)};

    const FactoredPoint xp = geometry::rebalance(x, f);
    const TangentPair xip = geometry::transport_rebalanced(xi, f);
    const TangentPair etap = geometry::transport_rebalanced(eta, f);

    // The transport preserves the ambient image of the tangent vector...
    CHECK(rel_diff(geometry::differential_of_product(xp, xip),
                   geometry::differential_of_product(x, xi)) <= 1e-12);
    // ...and the inner product.
    CHECK(rel_err(geometry::metric(xp, xip, etap), geometry::metric(x, xi, eta)) <= 1e-12);
  }
}

TEST_CASE("v_operator: kernel, tangent doubling, and the projector identity") {
  Matrix g(2, 1), h(2, 1);
  g << 1, 0;
  h << 1, 0;
  const auto amb = linalg::product_svd(g, h);  // X = e1 e1^T

  Matrix z = Matrix::Zero(2, 2);
  z(1, 1) = 1.0;  // e2 e2^T is orthogonal to the tangent space at X
  CHECK(geometry::v_operator(amb, z).norm() == 0.0);

  const Matrix x = amb.to_dense();
  CHECK(rel_diff(geometry::v_operator(amb, x), Matrix(2.0 * x)) <= 1e-14);

  Rng rng(27);
  for (int trial = 0; trial < 10; ++trial) {
    const FactoredPoint p = random_point(rng, 8, 6, 3);
    const auto fac = linalg::product_svd(p.G, p.H);
    const Matrix w = random_matrix(rng, 8, 6);
    const Matrix pu_w_pv = fac.u * (fac.u.transpose() * w * fac.v) * fac.v.transpose();
    const Matrix expected = geometry::tangent_project(fac, w) + pu_w_pv;
    CHECK(rel_diff(geometry::v_operator(fac, w), expected) <= 1e-12);
  }
}

TEST_CASE("tangent_project: fixes tangent vectors, kills the complement, idempotent") {
  Rng rng(28);
  const FactoredPoint p = random_point(rng, 9, 7, 3);
  const auto amb = linalg::product_svd(p.G, p.H);

  // A tangent vector in the U A^T + B V^T form.
  const Matrix a = random_matrix(rng, 7, 3);
  const Matrix b = random_matrix(rng, 9, 3);
  const Matrix tangent = amb.u * a.transpose() + b * amb.v.transpose();
  CHECK(rel_diff(geometry::tangent_project(amb, tangent), tangent) <= 1e-12);

  const Matrix w = random_matrix(rng, 9, 7);
  const Matrix perp = w - geometry::tangent_project(amb, w);
  CHECK(geometry::tangent_project(amb, perp).norm() <= 1e-12 * w.norm());

  const Matrix once = geometry::tangent_project(amb, w);
  CHECK(rel_diff(geometry::tangent_project(amb, once), once) <= 1e-12);

  // Self-adjoint under the Frobenius pairing.
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix z1 = random_matrix(rng, 9, 7);
    const Matrix z2 = random_matrix(rng, 9, 7);
    const double lhs = linalg::frob_inner(geometry::tangent_project(amb, z1), z2);
    const double rhs = linalg::frob_inner(z1, geometry::tangent_project(amb, z2));
    CHECK(rel_err(lhs, rhs) <= 1e-12);
  }
}

TEST_CASE("v_operator difference identity and quadratic-form bounds") {
  // V_X doubles the U M V^T core (V_X(X) = 2X) and vanishes on the normal
  // space, so V_X(X - Y) - 2(X - Y) collapses to (2I - V_X)(Y). Note that
  // V_X is *not* 2I on the whole tangent space: on the off-core tangent
  // components it acts as the identity, which the mixed-term check below
  // pins down.
  Rng rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    const FactoredPoint px = random_point(rng, 8, 7, 2);
    const FactoredPoint py = random_point(rng, 8, 7, 2);
    const auto ax = linalg::product_svd(px.G, px.H);
    const Matrix x = ax.to_dense();
    const Matrix y = py.product();

    // (V_X - 2 I)(X - Y) = (2 I - V_X)(Y)
    const Matrix lhs = geometry::v_operator(ax, x - y) - 2.0 * (x - y);
    const Matrix rhs = 2.0 * y - geometry::v_operator(ax, y);
    CHECK(rel_diff(lhs, rhs) <= 1e-10);

    // (2I - V_X)(Y) = 2 (I - P_TX)(Y) + [P_TX(Y) - P_U Y P_V]; the bracket
    // is the off-core tangent component of Y.
    const Matrix pu_y_pv = ax.u * (ax.u.transpose() * y * ax.v) * ax.v.transpose();
    const Matrix decomposition =
        2.0 * (y - geometry::tangent_project(ax, y)) + geometry::tangent_project(ax, y) - pu_y_pv;
    CHECK(rel_diff(lhs, decomposition) <= 1e-10);

    // Doubling on the core subspace U M V^T.
    const Matrix core = ax.u * random_matrix(rng, 2, 2) * ax.v.transpose();
    CHECK(rel_diff(geometry::v_operator(ax, core), Matrix(2.0 * core)) <= 1e-12);

    // 0 <= <V_X(Z), Z> <= 2 ||Z||^2
    const Matrix z = random_matrix(rng, 8, 7);
    const double quad = linalg::frob_inner(geometry::v_operator(ax, z), z);
    CHECK(quad >= -1e-12 * z.squaredNorm());
    CHECK(quad <= 2.0 * z.squaredNorm() * (1.0 + 1e-12));
  }
}

TEST_CASE("projector distance bound between nearby rank-k matrices") {
  Rng rng(30);
  for (int trial = 0; trial < 10; ++trial) {
    const FactoredPoint px = random_point(rng, 8, 7, 2);
    const FactoredPoint py = random_point(rng, 8, 7, 2);
    const auto ax = linalg::product_svd(px.G, px.H);
    const auto ay = linalg::product_svd(py.G, py.H);
    const Matrix x = ax.to_dense();
    const Matrix y = ay.to_dense();

    // ||(I - P_TY)(X)|| <= ||X - Y||^2 / sigma_min(X)
    const double lhs = (x - geometry::tangent_project(ay, x)).norm();
    const double bound = (x - y).squaredNorm() / ax.s(ax.rank() - 1);
    CHECK(lhs <= bound * (1.0 + 1e-10));
  }
}

TEST_CASE("induced_update: closed-form cases") {
  Rng rng(31);
  const auto inst = make_full_instance(rng, 6, 5, 2);

  // With the identity operator and a zero target, grad = X and the update
  // contracts by (1 - theta)^2.
  FactoredPoint zero_target{Matrix::Zero(6, 2), Matrix::Zero(5, 2)};
  const auto zinst = problems::make_full_observation(zero_target);
  const FactoredPoint x = random_point(rng, 6, 5, 2);
  const auto amb = linalg::product_svd(x.G, x.H);
  const Matrix xd = amb.to_dense();
  const Matrix egrad = problems::ambient_euclid_grad(zinst, amb);
  CHECK(rel_diff(egrad, xd) <= 1e-12);

  const double theta = 0.3;
  const Matrix next = geometry::induced_update(amb, egrad, theta);
  CHECK(rel_diff(next, Matrix(std::pow(1.0 - theta, 2) * xd)) <= 1e-12);

  CHECK(rel_diff(geometry::induced_update(amb, egrad, 0.0), xd) <= 1e-15);
}

TEST_CASE("induced_update equals one factored step pushed through the product map") {
  Rng rng(32);
  for (int trial = 0; trial < 12; ++trial) {
    const int m = 6 + static_cast<int>(rng.below(6));
    const int n = 5 + static_cast<int>(rng.below(6));
    const int k = 1 + static_cast<int>(rng.below(3));
    problems::ProblemInstance inst;
    switch (trial % 3) {
      case 0: inst = make_full_instance(rng, m, n, k); break;
      case 1: inst = make_mc_instance(rng, m, n, k, 0.6); break;
      default: inst = make_cs_instance(rng, m, n, k, 3 * m * k); break;
    }
    const FactoredPoint x = random_point(rng, m, n, k);
    const double theta = 0.1 + 0.8 * rng.uniform01();

    const auto amb = linalg::product_svd(x.G, x.H);
    const Matrix ambient_next =
        geometry::induced_update(amb, problems::ambient_euclid_grad(inst, amb), theta);

    for (int lift = 0; lift < 5; ++lift) {
      const BalancingTransform f{lift == 0 ? Matrix(Matrix::Identity(k, k))
                                           : random_transform(rng, k, 0.4, 2.5)};
      const FactoredPoint xl = geometry::rebalance(x, f);
      const TangentPair grad =
          geometry::riemannian_gradient(xl, problems::euclid_partials(inst, xl));
      const FactoredPoint stepped{xl.G - theta * grad.dG, xl.H - theta * grad.dH};
      CHECK(rel_diff(stepped.product(), ambient_next) <= 1e-10);
    }
  }
}
