#pragma once

#include "qprecon/generate.hpp"
#include "qprecon/solvers.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace qprecon::bench {

struct MethodSpec {
  solvers::Method method;
  solvers::StepRule rule;
  std::string label;
};

struct SweepSpec {
  std::vector<MethodSpec> methods;
  int m = 0, n = 0;
  std::vector<int> ranks;
  double bernoulli_p = 0.0;             // entry-sampling sweeps
  std::vector<std::uint64_t> seeds;
  long fixed_iters = 0;                 // > 0: run exactly this many iterations (timing mode)
  double grad_tol = 1e-8;
  double max_seconds = 600.0;
};

struct Cell {
  std::string method_label;
  int m = 0, n = 0, k = 0;
  double p = 0.0;
  std::uint64_t seed = 0;
  long iters = 0;
  double wall_seconds = 0.0;
  double sec_per_iter_median = 0.0;  // over iterations, excluding the first (warm-up)
  double final_grad_norm = 0.0;
  double final_recovery_rel = 0.0;
  std::string status;
  std::string error;  // non-empty when the cell failed
};

/// Run every (method, rank, seed) cell of the sweep; failures are recorded
/// in the cell and the sweep continues.
std::vector<Cell> run_sweep(const SweepSpec& spec);

void write_cells_csv(const std::filesystem::path& path, const std::vector<Cell>& cells);

}  // namespace qprecon::bench
