// Command-line front end: generate synthetic recovery instances, run the
// factored-space solvers on them, audit the recovery conditions, and time
// method sweeps. Every run with a seed is reproducible.

#include "qprecon/analysis.hpp"
#include "qprecon/bench.hpp"
#include "qprecon/config.hpp"
#include "qprecon/generate.hpp"
#include "qprecon/instance_io.hpp"
#include "qprecon/linalg.hpp"
#include "qprecon/matrix_io.hpp"
#include "qprecon/solvers.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

namespace {

namespace fs = std::filesystem;
using namespace qprecon;

fs::path default_out_dir() {
  if (const char* env = std::getenv("QPRECON_OUT_DIR")) return fs::path(env);
  return fs::current_path();
}

io::Sampling parse_sampling(const std::string& text, double& p, long& d) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "full") return io::Sampling::Full;
  if (kind == "bernoulli") {
    if (arg.empty())
      throw CLI::ValidationError("--sampling", "bernoulli needs a rate, e.g. bernoulli:0.8");
    p = std::stod(arg);
    return io::Sampling::Bernoulli;
  }
  if (kind == "gaussian") {
    if (arg.empty())
      throw CLI::ValidationError("--sampling", "gaussian needs a count, e.g. gaussian:2500");
    d = std::stol(arg);
    return io::Sampling::GaussianSensing;
  }
  throw CLI::ValidationError("--sampling", "unknown sampling '" + kind + "'");
}

solvers::Method parse_method(const std::string& name) {
  if (name == "rgd") return solvers::Method::Rgd;
  if (name == "rcg") return solvers::Method::Rcg;
  if (name == "egd") return solvers::Method::Egd;
  if (name == "ecg") return solvers::Method::Ecg;
  throw CLI::ValidationError("--method", "unknown method '" + name + "'");
}

solvers::StepRule parse_step(const std::string& name, double& fixed_theta) {
  if (name == "armijo") return solvers::StepRule::Armijo;
  if (name == "linemin") return solvers::StepRule::LineMin;
  if (name == "rbb1") return solvers::StepRule::Rbb1;
  if (name == "rbb2") return solvers::StepRule::Rbb2;
  if (name == "rbb1-nols") return solvers::StepRule::Rbb1NoLs;
  if (name == "rbb2-nols") return solvers::StepRule::Rbb2NoLs;
  if (name.rfind("fixed:", 0) == 0) {
    fixed_theta = std::stod(name.substr(6));
    return solvers::StepRule::Fixed;
  }
  throw CLI::ValidationError("--step", "unknown stepsize rule '" + name + "'");
}

// Config keys mirror the long flags (underscores for dashes). Values from
// the file fill in flags absent from the command line; explicit flags win.
const std::map<std::string, std::set<std::string>> kConfigKeys = {
    {"generate", {"m", "n", "k", "model", "sampling", "seed", "out"}},
    {"solve",
     {"method", "step", "rank", "init", "balance", "grad_tol", "rel_grad_tol", "max_iters",
      "max_seconds", "rmse_target", "armijo_sigma", "backtrack_beta", "max_backtracks", "seed",
      "out"}},
    {"verify", {"samples", "seed", "delta", "cstar", "c2", "out"}},
    {"bench",
     {"methods", "m", "n", "ranks", "p", "seeds", "fixed_iters", "grad_tol", "max_seconds",
      "out"}},
};

std::vector<std::string> merge_config_args(std::vector<std::string> args) {
  std::string config_path;
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--config") {
      config_path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
  }
  if (config_path.empty() || args.empty()) return args;

  const auto allowed = kConfigKeys.find(args.front());
  if (allowed == kConfigKeys.end())
    throw io::ParseError("--config is not supported for '" + args.front() + "'");

  const auto cfg = io::KeyValueConfig::from_file(config_path);
  for (const auto& [key, value] : cfg.values()) {
    if (!allowed->second.count(key))
      throw io::ParseError("config: unknown key '" + key + "' for subcommand " + args.front());
    std::string flag = "--" + key;
    for (auto& c : flag)
      if (c == '_') c = '-';
    const bool present = std::find(args.begin(), args.end(), flag) != args.end();
    if (!present) args.push_back(flag + "=" + value);
  }
  return args;
}

int cmd_generate(int m, int n, int k, const std::string& model, const std::string& sampling,
                 std::uint64_t seed, const fs::path& out_dir) {
  io::GeneratorSpec spec;
  spec.m = m;
  spec.n = n;
  spec.k = k;
  spec.seed = seed;
  if (model == "gaussian_factors")
    spec.model = io::Model::GaussianFactors;
  else if (model == "zero")
    spec.model = io::Model::ZeroMatrix;
  else
    throw CLI::ValidationError("--model", "unknown model '" + model + "'");
  spec.sampling = parse_sampling(sampling, spec.bernoulli_p, spec.sensing_d);

  const auto inst = io::generate(spec);
  io::save_instance(out_dir, inst, spec);
  std::cout << "instance " << m << "x" << n << " k=" << k << " written to " << out_dir.string()
            << " (hash " << io::instance_data_hash(out_dir) << ")\n";
  return 0;
}

int cmd_solve(const fs::path& instance_dir, const std::string& method_name,
              const std::string& step_name, int rank, const std::string& init_name,
              const std::string& balance, double grad_tol, bool rel_grad_tol, long max_iters,
              double max_seconds, double rmse_target, double armijo_sigma, double backtrack_beta,
              int max_backtracks, std::uint64_t seed, const fs::path& out_dir) {
  const auto inst = io::load_instance(instance_dir);
  const int k = rank > 0 ? rank : inst.k;

  io::InitSpec init;
  if (init_name == "spectral")
    init.strategy = io::InitStrategy::Spectral;
  else if (init_name == "random")
    init.strategy = io::InitStrategy::RandomGaussian;
  else
    throw CLI::ValidationError("--init", "unknown initialization '" + init_name + "'");
  init.seed = seed;
  if (balance.rfind("unbalanced:", 0) == 0)
    init.unbalance_lambda = std::stod(balance.substr(11));
  else if (balance != "balanced")
    throw CLI::ValidationError("--balance", "expected 'balanced' or 'unbalanced:<lambda>'");

  solvers::SolverConfig cfg;
  cfg.method = parse_method(method_name);
  cfg.step_rule = parse_step(step_name, cfg.fixed_theta);
  cfg.grad_tol = grad_tol;
  cfg.grad_tol_relative = rel_grad_tol;
  cfg.max_iters = max_iters;
  cfg.max_seconds = max_seconds;
  cfg.armijo_sigma = armijo_sigma;
  cfg.backtrack_beta = backtrack_beta;
  cfg.max_backtracks = max_backtracks;
  cfg.seed = seed;
  if (rmse_target > 0) cfg.rmse_target = rmse_target;

  const auto x0 = io::initialize(inst, init, k);
  const auto result = solvers::solve(inst, x0.x0, cfg);

  fs::create_directories(out_dir);
  io::write_trace_csv(out_dir / "trace.csv", result.trace);

  const auto& last = result.trace.back();
  std::cout << "status=" << solvers::status_name(result.status) << " iters=" << last.iter
            << " gradnorm=" << io::format_double(last.grad_norm)
            << " recovery_error=" << io::format_double(last.recovery_error)
            << " seconds=" << io::format_double(last.wall_seconds) << "\n";

  switch (result.status) {
    case solvers::Status::GradToleranceReached:
    case solvers::Status::RmseReached:
      return 0;
    case solvers::Status::MaxIters:
    case solvers::Status::MaxTime:
      return 2;
    default:
      return 3;
  }
}

int cmd_verify(const fs::path& instance_dir, int samples, std::uint64_t seed, double delta,
               double c_star, double c2, const fs::path& out_dir) {
  const auto inst = io::load_instance(instance_dir);
  fs::create_directories(out_dir);

  std::ofstream txt(out_dir / "report.txt");
  std::ofstream csv(out_dir / "report.csv");
  csv << "quantity,value\n";
  auto emit = [&](const std::string& name, double value) {
    txt << name << " = " << io::format_double(value) << "\n";
    csv << name << "," << io::format_double(value) << "\n";
  };

  const auto amb = linalg::product_svd(inst.mstar.G, inst.mstar.H);
  const double mu = analysis::incoherence(amb);
  emit("sigma_max_star", amb.s(0));
  emit("sigma_min_star", amb.s(amb.rank() - 1));
  emit("incoherence_mu", mu);

  const auto rpd_k = analysis::estimate_rpd(inst.op, inst.m, inst.n, amb, inst.k, samples, seed);
  emit("rpd_beta_hat_rank_k", rpd_k.beta_hat);
  emit("rpd_min_quotient_rank_k", rpd_k.min_quotient);
  emit("rpd_max_quotient_rank_k", rpd_k.max_quotient);
  const auto rpd_2k = analysis::estimate_rpd(inst.op, inst.m, inst.n, std::nullopt,
                                             std::min(2 * inst.k, std::min(inst.m, inst.n)),
                                             samples, seed + 1);
  emit("rpd_beta_hat_rank_2k", rpd_2k.beta_hat);

  const auto ray = analysis::hessian_rayleigh(inst, samples, seed + 2);
  emit("hessian_rayleigh_min", ray.min_quotient);
  emit("hessian_rayleigh_max", ray.max_quotient);

  const double used_delta = delta > 0 ? delta : 0.1 * amb.s(amb.rank() - 1);
  analysis::TheoryOptions opts;
  opts.beta_2k = rpd_2k.beta_hat;
  if (std::holds_alternative<problems::EntrySampling>(inst.op))
    opts.mc = analysis::McIncoherenceParams{mu, c_star, c2};
  const auto tc = analysis::theory_constants(inst, std::min(rpd_k.beta_hat, 0.999), used_delta,
                                             amb.s(amb.rank() - 1), opts);
  emit("lipschitz_bound", tc.lipschitz);
  emit("opnorm_lowrank_estimate",
       analysis::opnorm_lowrank_estimate(inst.op, inst.m, inst.n, inst.k, 50, seed + 3));
  emit("nu_tilde", tc.nu_tilde);
  emit("delta_max", tc.delta_max);
  emit("c_delta_t", tc.c_delta_t);
  emit("theta_max", tc.theta_max);
  emit("region_violated", tc.region_violated ? 1.0 : 0.0);
  if (tc.mc_delta_max) emit("mc_delta_max", *tc.mc_delta_max);

  if (const auto* es = std::get_if<problems::EntrySampling>(&inst.op)) {
    const double c1 = amb.s(0) * std::sqrt(2.0 * c_star * inst.k);
    const auto rep = analysis::mc_rpd_check(inst, samples, c1, mu, used_delta, seed + 4);
    emit("mc_rpd_pass_fraction", rep.pass_fraction);
    emit("mc_rpd_accepted", rep.accepted);
    emit("mc_rpd_min_quotient", rep.min_quotient);
    emit("mc_rpd_max_quotient", rep.max_quotient);
    // Informational sample-count threshold for the two-sided bound, with
    // C0 = 1: |Omega| >= alpha k kappa^2 max(mu log n, sqrt(alpha) k^6 mu^2 kappa^4).
    const double alpha = static_cast<double>(std::max(inst.m, inst.n)) / std::min(inst.m, inst.n);
    const double kappa = amb.s(0) / amb.s(amb.rank() - 1);
    const double needed =
        alpha * inst.k * kappa * kappa *
        std::max(mu * std::log(static_cast<double>(inst.n)),
                 std::sqrt(alpha) * std::pow(inst.k, 6) * mu * mu * std::pow(kappa, 4));
    emit("mc_sample_count", static_cast<double>(es->pattern.nnz()));
    emit("mc_sample_count_threshold_c0_1", needed);
  }

  std::cout << "verification report written to " << out_dir.string() << "\n";
  return 0;
}

int cmd_bench(const std::string& methods_csv, int m, int n, const std::string& ranks_csv, double p,
              const std::string& seeds_csv, long fixed_iters, double grad_tol, double max_seconds,
              const fs::path& out_csv) {
  bench::SweepSpec spec;
  spec.m = m;
  spec.n = n;
  spec.bernoulli_p = p;
  spec.fixed_iters = fixed_iters;
  spec.grad_tol = grad_tol;
  spec.max_seconds = max_seconds;

  auto split = [](const std::string& csv) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
      const auto comma = csv.find(',', start);
      out.push_back(csv.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  };
  for (const auto& token : split(methods_csv)) {
    const auto colon = token.find(':');
    if (colon == std::string::npos)
      throw CLI::ValidationError("--methods", "expected method:step, got '" + token + "'");
    bench::MethodSpec ms;
    ms.label = token;
    ms.method = parse_method(token.substr(0, colon));
    double fixed_theta = 1.0;
    ms.rule = parse_step(token.substr(colon + 1), fixed_theta);
    spec.methods.push_back(ms);
  }
  for (const auto& token : split(ranks_csv)) spec.ranks.push_back(std::stoi(token));
  for (const auto& token : split(seeds_csv)) spec.seeds.push_back(std::stoull(token));

  const auto cells = bench::run_sweep(spec);
  bench::write_cells_csv(out_csv, cells);
  int failures = 0;
  for (const auto& c : cells) {
    std::cout << c.method_label << " k=" << c.k << " seed=" << c.seed << " iters=" << c.iters
              << " sec/iter=" << io::format_double(c.sec_per_iter_median) << " status=" << c.status
              << "\n";
    if (!c.error.empty()) ++failures;
  }
  std::cout << "sweep written to " << out_csv.string() << " (" << failures << " failed cells)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preconditioned quotient-metric solvers for fixed-rank matrix recovery"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic recovery instance");
  int g_m = 0, g_n = 0, g_k = 0;
  std::string g_model = "gaussian_factors", g_sampling;
  std::uint64_t g_seed = 0;
  std::string g_out;
  gen->add_option("--m", g_m, "rows")->required();
  gen->add_option("--n", g_n, "columns")->required();
  gen->add_option("--k", g_k, "rank")->required();
  gen->add_option("--model", g_model, "gaussian_factors | zero");
  gen->add_option("--sampling", g_sampling, "bernoulli:<p> | gaussian:<d> | full")->required();
  gen->add_option("--seed", g_seed, "RNG seed");
  gen->add_option("--out", g_out, "output directory");

  // solve
  auto* slv = app.add_subcommand("solve", "Run a solver on an instance directory");
  std::string s_instance, s_method = "rgd", s_step = "rbb2", s_init = "spectral",
              s_balance = "balanced", s_out;
  int s_rank = 0, s_max_backtracks = 50;
  double s_grad_tol = 1e-8, s_max_seconds = 1e9, s_rmse = 0.0, s_sigma = 1e-4, s_beta = 0.5;
  bool s_rel = false;
  long s_max_iters = 5000;
  std::uint64_t s_seed = 0;
  slv->add_option("--instance", s_instance, "instance directory")->required();
  slv->add_option("--method", s_method, "rgd | rcg | egd | ecg");
  slv->add_option("--step", s_step,
                  "armijo | linemin | rbb1 | rbb2 | rbb1-nols | rbb2-nols | fixed:<theta>");
  slv->add_option("--rank", s_rank, "solve rank (defaults to instance rank)");
  slv->add_option("--init", s_init, "spectral | random");
  slv->add_option("--balance", s_balance, "balanced | unbalanced:<lambda>");
  slv->add_option("--grad-tol", s_grad_tol, "gradient-norm stopping tolerance");
  slv->add_flag("--rel-grad-tol", s_rel,
                "measure the tolerance relative to the initial gradient norm");
  slv->add_option("--max-iters", s_max_iters, "iteration budget");
  slv->add_option("--max-seconds", s_max_seconds, "wall-clock budget");
  slv->add_option("--rmse-target", s_rmse, "stop at this relative recovery error");
  slv->add_option("--armijo-sigma", s_sigma, "sufficient-decrease parameter");
  slv->add_option("--backtrack-beta", s_beta, "backtracking shrink factor");
  slv->add_option("--max-backtracks", s_max_backtracks, "backtracking budget");
  slv->add_option("--seed", s_seed, "seed for random initialization");
  slv->add_option("--out", s_out, "output directory for trace.csv");

  // verify
  auto* ver = app.add_subcommand("verify", "Audit recovery conditions on an instance");
  std::string v_instance, v_out;
  int v_samples = 200;
  std::uint64_t v_seed = 0;
  double v_delta = 0.0, v_cstar = 2.0, v_c2 = 1.0;
  ver->add_option("--instance", v_instance, "instance directory")->required();
  ver->add_option("--samples", v_samples, "sample count per estimator");
  ver->add_option("--seed", v_seed, "RNG seed");
  ver->add_option("--delta", v_delta, "neighborhood radius (default 0.1 sigma_min)");
  ver->add_option("--cstar", v_cstar, "incoherence-cap constant (> 1)");
  ver->add_option("--c2", v_c2, "row-norm comparison constant in [1/sqrt(m), 1]");
  ver->add_option("--out", v_out, "output directory for report files");

  // bench
  auto* ben = app.add_subcommand("bench", "Timing sweep over methods x ranks x seeds");
  std::string b_methods = "rgd:rbb2,egd:armijo", b_ranks = "5,10", b_seeds = "1", b_out;
  int b_m = 0, b_n = 0;
  double b_p = 0.5, b_grad_tol = 1e-8, b_max_seconds = 600.0;
  long b_fixed_iters = 0;
  ben->add_option("--methods", b_methods, "comma list of method:step cells");
  ben->add_option("--m", b_m, "rows")->required();
  ben->add_option("--n", b_n, "columns")->required();
  ben->add_option("--ranks", b_ranks, "comma list of ranks");
  ben->add_option("--p", b_p, "Bernoulli sampling rate");
  ben->add_option("--seeds", b_seeds, "comma list of seeds");
  ben->add_option("--fixed-iters", b_fixed_iters, "run exactly this many iterations (timing mode)");
  ben->add_option("--grad-tol", b_grad_tol, "tolerance when not in timing mode");
  ben->add_option("--max-seconds", b_max_seconds, "per-cell budget");
  ben->add_option("--out", b_out, "output CSV path");

  std::vector<std::string> args;
  try {
    args = merge_config_args(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::vector<const char*> cargs{argv[0]};
  for (const auto& a : args) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const fs::path out_base = default_out_dir();
    if (gen->parsed())
      return cmd_generate(g_m, g_n, g_k, g_model, g_sampling, g_seed,
                          g_out.empty() ? out_base / "instance" : fs::path(g_out));
    if (slv->parsed())
      return cmd_solve(s_instance, s_method, s_step, s_rank, s_init, s_balance, s_grad_tol, s_rel,
                       s_max_iters, s_max_seconds, s_rmse, s_sigma, s_beta, s_max_backtracks,
                       s_seed, s_out.empty() ? out_base / "solve" : fs::path(s_out));
    if (ver->parsed())
      return cmd_verify(v_instance, v_samples, v_seed, v_delta, v_cstar, v_c2,
                        v_out.empty() ? out_base / "verify" : fs::path(v_out));
    if (ben->parsed())
      return cmd_bench(b_methods, b_m, b_n, b_ranks, b_p, b_seeds, b_fixed_iters, b_grad_tol,
                       b_max_seconds, b_out.empty() ? out_base / "bench.csv" : fs::path(b_out));
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
