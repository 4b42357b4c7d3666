#include "qprecon/generate.hpp"

#include "qprecon/geometry.hpp"
#include "qprecon/linalg.hpp"
#include "qprecon/rng.hpp"

#include <cmath>

namespace qprecon::io {

using problems::ProblemInstance;

void GeneratorSpec::validate() const {
  if (m < 1 || n < 1) throw std::invalid_argument("generator: m and n must be positive");
  if (k < 1 || k > std::min(m, n)) throw std::invalid_argument("generator: k out of range");
  if (sampling == Sampling::Bernoulli && !(bernoulli_p > 0.0 && bernoulli_p <= 1.0))
    throw std::invalid_argument("generator: bernoulli rate must be in (0, 1]");
  if (sampling == Sampling::GaussianSensing && sensing_d < 1)
    throw std::invalid_argument("generator: sensing measurement count must be >= 1");
}

namespace {

FactoredPoint draw_ground_truth(const GeneratorSpec& spec, Rng& rng) {
  if (spec.model == Model::ZeroMatrix)
    return {Matrix::Zero(spec.m, spec.k), Matrix::Zero(spec.n, spec.k)};
  for (int attempt = 0; attempt < 4; ++attempt) {
    FactoredPoint mstar{rng.gaussian_matrix(spec.m, spec.k), rng.gaussian_matrix(spec.n, spec.k)};
    try {
      (void)linalg::product_svd(mstar.G, mstar.H);  // full-rank check
      return mstar;
    } catch (const RankDeficiencyError&) {
      continue;  // probability-zero event; redraw
    }
  }
  throw std::runtime_error("generator: could not draw full-rank ground-truth factors");
}

SparseCoord draw_bernoulli_pattern(const GeneratorSpec& spec, Rng& rng) {
  for (int attempt = 0; attempt < 3; ++attempt) {
    std::vector<Triplet> entries;
    // Column-major scan matches the storage order of SparseCoord.
    for (int j = 0; j < spec.n; ++j)
      for (int i = 0; i < spec.m; ++i)
        if (rng.uniform01() < spec.bernoulli_p) entries.push_back({i, j, 0.0});
    if (!entries.empty()) return SparseCoord(spec.m, spec.n, std::move(entries));
  }
  throw std::runtime_error("generator: empty index set after 3 sampling attempts");
}

}  // namespace

ProblemInstance generate(const GeneratorSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  FactoredPoint mstar = draw_ground_truth(spec, rng);

  switch (spec.sampling) {
    case Sampling::Full:
      return problems::make_full_observation(std::move(mstar));
    case Sampling::Bernoulli: {
      const SparseCoord pattern = draw_bernoulli_pattern(spec, rng);
      return problems::make_entry_sampling(std::move(mstar), pattern);
    }
    case Sampling::GaussianSensing: {
      Matrix phi = rng.gaussian_matrix(static_cast<int>(spec.sensing_d),
                                       static_cast<int>(static_cast<long>(spec.m) * spec.n));
      return problems::make_gaussian_sensing(std::move(mstar), std::move(phi));
    }
  }
  throw std::invalid_argument("generator: unknown sampling kind");
}

InitResult initialize(const ProblemInstance& inst, const InitSpec& init, int k) {
  if (k < 1 || k > std::min(inst.m, inst.n))
    throw std::invalid_argument("initialize: rank out of range");
  if (!(init.unbalance_lambda > 0.0))
    throw std::invalid_argument("initialize: lambda must be positive");

  InitResult out;
  if (init.strategy == InitStrategy::RandomGaussian) {
    // Decorrelated from the instance-generation stream, so reusing the
    // instance seed does not replay the ground-truth draw.
    Rng rng = Rng::stream(init.seed, 0x1217);
    out.x0 = {rng.gaussian_matrix(inst.m, k), rng.gaussian_matrix(inst.n, k)};
  } else {
    const Matrix d = problems::adjoint_of_observations(inst);
    const linalg::TruncatedSvd trunc = linalg::truncated_svd(d, k);
    Matrix u = trunc.factors.u;
    Matrix v = trunc.factors.v;
    Vector s = trunc.factors.s;
    if (!trunc.full_requested_rank) {
      // Pad missing directions with small random ones orthogonal to the
      // recovered subspaces.
      out.rank_padded = true;
      Rng rng = Rng::stream(init.seed, 0xF1A9);
      const int have = trunc.factors.rank();
      Matrix u_full(inst.m, k), v_full(inst.n, k);
      u_full.leftCols(have) = u;
      v_full.leftCols(have) = v;
      Vector s_full(k);
      s_full.head(have) = s;
      for (int j = have; j < k; ++j) {
        Vector cu = rng.gaussian_matrix(inst.m, 1);
        cu -= u_full.leftCols(j) * (u_full.leftCols(j).transpose() * cu);
        u_full.col(j) = cu / cu.norm();
        Vector cv = rng.gaussian_matrix(inst.n, 1);
        cv -= v_full.leftCols(j) * (v_full.leftCols(j).transpose() * cv);
        v_full.col(j) = cv / cv.norm();
        s_full(j) = 1e-8 * s_full(0);
      }
      u = std::move(u_full);
      v = std::move(v_full);
      s = std::move(s_full);
    }
    const Vector sqrt_s = s.cwiseSqrt();
    out.x0 = {u * sqrt_s.asDiagonal(), v * sqrt_s.asDiagonal()};
  }

  if (init.unbalance_lambda != 1.0) {
    // Unbalancing is exactly a fiber move: (G, H) -> (lambda G, H / lambda).
    const Matrix f = (1.0 / init.unbalance_lambda) *
                     Matrix::Identity(out.x0.rank(), out.x0.rank());
    out.x0 = geometry::rebalance(out.x0, {f});
  }
  return out;
}

}  // namespace qprecon::io
