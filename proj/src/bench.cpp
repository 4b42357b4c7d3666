#include "qprecon/bench.hpp"

#include "qprecon/linalg.hpp"
#include "qprecon/matrix_io.hpp"

#include <algorithm>
#include <fstream>

namespace qprecon::bench {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

Cell run_cell(const SweepSpec& spec, const MethodSpec& method, int k, std::uint64_t seed) {
  Cell cell;
  cell.method_label = method.label;
  cell.m = spec.m;
  cell.n = spec.n;
  cell.k = k;
  cell.p = spec.bernoulli_p;
  cell.seed = seed;
  try {
    io::GeneratorSpec gen;
    gen.m = spec.m;
    gen.n = spec.n;
    gen.k = k;
    gen.sampling = io::Sampling::Bernoulli;
    gen.bernoulli_p = spec.bernoulli_p;
    gen.seed = seed;
    const auto inst = io::generate(gen);
    const auto init = io::initialize(inst, io::InitSpec{}, k);

    solvers::SolverConfig cfg;
    cfg.method = method.method;
    cfg.step_rule = method.rule;
    cfg.grad_tol = spec.grad_tol;
    cfg.max_seconds = spec.max_seconds;
    cfg.seed = seed;
    if (spec.fixed_iters > 0) {
      // Pure timing mode: run exactly fixed_iters steps, no stopping rules
      // and no recovery bookkeeping in the loop.
      cfg.max_iters = spec.fixed_iters;
      cfg.grad_tol = 0.0;
      cfg.track_recovery = false;
    } else {
      cfg.max_iters = 100000;
    }

    const auto result = solvers::solve(inst, init.x0, cfg);
    cell.iters = static_cast<long>(result.trace.size()) - 1;
    cell.wall_seconds = result.trace.back().wall_seconds;
    cell.final_grad_norm = result.trace.back().grad_norm;
    cell.status = solvers::status_name(result.status);

    std::vector<double> per_iter;
    for (std::size_t i = 2; i < result.trace.size(); ++i)
      per_iter.push_back(result.trace[i].wall_seconds - result.trace[i - 1].wall_seconds);
    cell.sec_per_iter_median = median(std::move(per_iter));

    const double mstar_norm = linalg::frob_norm(inst.mstar.product());
    cell.final_recovery_rel =
        problems::recovery_error(inst, result.x) / (mstar_norm > 0 ? mstar_norm : 1.0);
  } catch (const std::exception& e) {
    cell.error = e.what();
    cell.status = "error";
  }
  return cell;
}

}  // namespace

std::vector<Cell> run_sweep(const SweepSpec& spec) {
  std::vector<Cell> cells;
  for (const auto& method : spec.methods)
    for (int k : spec.ranks)
      for (std::uint64_t seed : spec.seeds) cells.push_back(run_cell(spec, method, k, seed));
  return cells;
}

void write_cells_csv(const std::filesystem::path& path, const std::vector<Cell>& cells) {
  std::ofstream out(path);
  if (!out) throw io::ParseError("cannot open for writing: " + path.string());
  out << "method,m,n,k,p,seed,iters,wall_seconds,sec_per_iter_median,final_gradnorm,"
         "final_recovery_rel,status,error\n";
  for (const auto& c : cells) {
    out << c.method_label << "," << c.m << "," << c.n << "," << c.k << ","
        << io::format_double(c.p) << "," << c.seed << "," << c.iters << ","
        << io::format_double(c.wall_seconds) << "," << io::format_double(c.sec_per_iter_median)
        << "," << io::format_double(c.final_grad_norm) << ","
        << io::format_double(c.final_recovery_rel) << "," << c.status << "," << c.error << "\n";
  }
}

}  // namespace qprecon::bench
