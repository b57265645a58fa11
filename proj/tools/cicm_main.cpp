#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cicm/cate.hpp"
#include "cicm/data.hpp"
#include "cicm/errors.hpp"
#include "cicm/harness.hpp"
#include "cicm/simgen.hpp"
#include "cicm/tuning.hpp"
#include "nlohmann/json.hpp"

namespace {

using namespace cicm;

std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty() || dir == ".") return name;
  if (dir.back() == '/') return dir + name;
  return dir + "/" + name;
}

// --out wins; otherwise the CICM_OUT_DIR environment variable; otherwise cwd.
// The directory is created if missing.
std::string resolve_out_dir(const std::string& flag_value) {
  std::string dir = ".";
  if (!flag_value.empty()) {
    dir = flag_value;
  } else if (const char* env = std::getenv("CICM_OUT_DIR")) {
    if (*env) dir = env;
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory: " + dir);
  return dir;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << j.dump(2) << "\n";
}

struct SimulateArgs {
  std::string scenario = "uni1";
  std::uint64_t seed = 0;
  int pool_size = 1000;
  int n_obs = 1000;
  double selection_scale = 1.0;
  std::string out_dir;
};

int cmd_simulate(const SimulateArgs& args) {
  const SimScenario scenario = make_scenario(parse_scenario(args.scenario), args.pool_size,
                                             args.n_obs, args.selection_scale);
  const SimOutput sim = simulate(scenario, args.seed);
  const std::string dir = resolve_out_dir(args.out_dir);
  write_dataset_csv(join_path(dir, "rct.csv"), sim.rct);
  write_dataset_csv(join_path(dir, "obs.csv"), sim.obs);
  nlohmann::json truth;
  truth["scenario"] = scenario_name(scenario.id);
  truth["dim"] = scenario.dim;
  truth["pool_size"] = scenario.pool_size;
  truth["n_obs"] = scenario.n_obs;
  truth["selection_scale"] = scenario.selection_scale;
  truth["seed"] = args.seed;
  truth["n_rct_rows"] = sim.rct.X.rows();
  truth["n_obs_rows"] = sim.obs.X.rows();
  write_json_file(join_path(dir, "truth.json"), truth);
  std::cout << "wrote rct.csv (" << sim.rct.X.rows() << " rows), obs.csv (" << sim.obs.X.rows()
            << " rows), truth.json to " << dir << "\n";
  return 0;
}

struct FitArgs {
  std::string rct_path, obs_path, test_path;
  double rho = 0.0;
  bool rho_set = false;
  bool auto_rho = false;
  std::string kernel = "rbf";
  std::string method = "causal_icm";
  double level = 0.95;
  int folds = 5;
  std::string tune_mode = "refit";
  int restarts = 3;
  std::uint64_t seed = 0;
  std::string out_dir;
};

TuneMode parse_tune_mode(const std::string& mode) {
  if (mode == "refit") return TuneMode::Refit;
  if (mode == "fast" || mode == "frozen") return TuneMode::Frozen;
  throw ValidationError("tune mode must be 'refit' or 'fast' (got '" + mode + "')");
}

void write_predictions_csv(const std::string& path, const std::vector<CatePosterior>& preds) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out.precision(17);
  out << "tau_mean,tau_var,ci_low,ci_high\n";
  for (const CatePosterior& p : preds) {
    out << p.mean << "," << p.variance << "," << p.ci_low << "," << p.ci_high << "\n";
  }
}

int cmd_fit(const FitArgs& args) {
  const KernelFamily family = parse_kernel_family(args.kernel);
  const MethodId method = parse_method(args.method);
  if (method == MethodId::CausalIcm && !args.rho_set && !args.auto_rho) {
    throw ValidationError("fit: pass either --rho or --auto-rho");
  }

  const Dataset rct = read_dataset_csv(args.rct_path, Study::Experimental);
  const Dataset obs = read_dataset_csv(args.obs_path, Study::Observational);
  const Eigen::MatrixXd test = read_covariates_csv(args.test_path);
  if (test.cols() != rct.X.cols()) {
    throw DataShapeError("test covariates have " + std::to_string(test.cols()) +
                         " columns but training data has " + std::to_string(rct.X.cols()));
  }

  FitOptions opts;
  opts.folds = args.folds;
  opts.tune_mode = parse_tune_mode(args.tune_mode);
  opts.restarts = args.restarts;
  opts.seed = args.seed;

  std::vector<CatePosterior> preds;
  nlohmann::json report;
  switch (method) {
    case MethodId::CausalIcm: {
      const std::optional<double> rho =
          args.auto_rho ? std::nullopt : std::optional<double>(args.rho);
      const CausalIcmModel model = fit_causal_icm_cate(rct, obs, rho, family, opts);
      preds = model.predict(test, args.level);
      report = model.report();
      break;
    }
    case MethodId::GpExp: {
      const GpTlearner model = fit_tlearner_gp(rct, family, opts);
      preds = model.predict(test, args.level);
      report = model.report();
      break;
    }
    case MethodId::GpObs: {
      const GpTlearner model = fit_tlearner_gp(obs, family, opts);
      preds = model.predict(test, args.level);
      report = model.report();
      break;
    }
    case MethodId::ExpGround: {
      const ExperimentalGrounding model = fit_experimental_grounding(rct, obs, family, 0.5, opts);
      preds = model.predict(test, args.level);
      report = model.report();
      break;
    }
  }
  report["level"] = args.level;
  report["seed"] = args.seed;

  const std::string dir = resolve_out_dir(args.out_dir);
  write_predictions_csv(join_path(dir, "predictions.csv"), preds);
  write_json_file(join_path(dir, "fit_report.json"), report);
  std::cout << "wrote predictions.csv (" << preds.size() << " rows), fit_report.json to " << dir
            << "\n";
  return 0;
}

struct TuneArgs {
  std::string rct_path, obs_path;
  std::string kernel = "rbf";
  int folds = 5;
  std::string tune_mode = "refit";
  int restarts = 3;
  std::uint64_t seed = 0;
  std::string out_dir;
};

int cmd_tune_rho(const TuneArgs& args) {
  const KernelFamily family = parse_kernel_family(args.kernel);
  const Dataset rct = read_dataset_csv(args.rct_path, Study::Experimental);
  const Dataset obs = read_dataset_csv(args.obs_path, Study::Observational);

  FitOptions opts;
  opts.folds = args.folds;
  opts.tune_mode = parse_tune_mode(args.tune_mode);
  opts.restarts = args.restarts;
  opts.seed = args.seed;
  const CausalIcmModel model = fit_causal_icm_cate(rct, obs, std::nullopt, family, opts);

  nlohmann::json j = rho_selection_to_json(*model.selection);
  const std::string dir = resolve_out_dir(args.out_dir);
  write_json_file(join_path(dir, "rho_selection.json"), j);
  std::cout << "chosen rho: " << model.rho << " (wrote rho_selection.json to " << dir << ")\n";
  return 0;
}

struct BenchmarkArgs {
  std::string config_path;
  std::string out_dir;
  int jobs = -1;  // -1 = take from config
  bool runtime = false;
  int runtime_runs = 5;
};

int cmd_benchmark(const BenchmarkArgs& args) {
  std::ifstream in(args.config_path);
  if (!in) throw ValidationError("cannot read config file: " + args.config_path);
  nlohmann::json cfg_json;
  try {
    cfg_json = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  BenchmarkConfig config = config_from_json(cfg_json);
  if (args.jobs >= 0) config.jobs = args.jobs;

  const std::string dir = resolve_out_dir(args.out_dir);
  if (args.runtime) {
    const auto table = runtime_bench(config, args.runtime_runs);
    nlohmann::json j;
    for (const auto& [method, row] : table) {
      j[method_name(method)] = {{"mean_seconds", row.mean}, {"sd_seconds", row.sd},
                                {"median_seconds", row.median}, {"min_seconds", row.min},
                                {"max_seconds", row.max}, {"runs", row.runs}};
    }
    write_json_file(join_path(dir, "timings.json"), j);
    std::cout << "wrote timings.json to " << dir << "\n";
    return 0;
  }

  const BenchmarkResult result = run_benchmark(config);
  write_results_csv(join_path(dir, "results.csv"), result);
  write_summary_json(join_path(dir, "summary.json"), result);
  write_coverage_csv(join_path(dir, "coverage.csv"), result);
  std::cout << "wrote results.csv, summary.json, coverage.csv to " << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Treatment-effect estimation by fusing a randomized trial with an "
               "observational study"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "Draw one synthetic trial/observational pair");
  sim->add_option("--scenario", sim_args.scenario, "uni1, uni2, multi1, or multi2");
  sim->add_option("--seed", sim_args.seed, "RNG seed");
  sim->add_option("--pool", sim_args.pool_size, "trial candidate pool size")
      ->check(CLI::PositiveNumber);
  sim->add_option("--n-obs", sim_args.n_obs, "observational sample size")
      ->check(CLI::PositiveNumber);
  sim->add_option("--selection-scale", sim_args.selection_scale,
                  "multiplier on the trial selection logit");
  sim->add_option("--out", sim_args.out_dir, "output directory");

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand("fit", "Fit an estimator and predict effects on test points");
  fit->add_option("--rct", fit_args.rct_path, "trial CSV (x1..xp,y,a)")->required();
  fit->add_option("--obs", fit_args.obs_path, "observational CSV (x1..xp,y,a)")->required();
  fit->add_option("--test", fit_args.test_path, "test covariate CSV (x1..xp)")->required();
  CLI::Option* rho_opt =
      fit->add_option("--rho", fit_args.rho, "fixed borrowing strength in [0,1]");
  CLI::Option* auto_opt =
      fit->add_flag("--auto-rho", fit_args.auto_rho, "select rho by cross-validation");
  rho_opt->excludes(auto_opt);
  fit->add_option("--kernel", fit_args.kernel, "rbf, matern32, or matern52");
  fit->add_option("--method", fit_args.method,
                  "causal_icm (default), gp_exp, gp_obs, or exp_ground");
  fit->add_option("--level", fit_args.level, "credible-interval level (default 0.95)");
  fit->add_option("--folds", fit_args.folds, "folds for rho selection");
  fit->add_option("--tune-mode", fit_args.tune_mode, "refit or fast");
  fit->add_option("--restarts", fit_args.restarts, "optimizer restarts");
  fit->add_option("--seed", fit_args.seed, "RNG seed");
  fit->add_option("--out", fit_args.out_dir, "output directory");

  TuneArgs tune_args;
  CLI::App* tune = app.add_subcommand("tune-rho", "Cross-validate the borrowing strength");
  tune->add_option("--rct", tune_args.rct_path, "trial CSV (x1..xp,y,a)")->required();
  tune->add_option("--obs", tune_args.obs_path, "observational CSV (x1..xp,y,a)")->required();
  tune->add_option("--kernel", tune_args.kernel, "rbf, matern32, or matern52");
  tune->add_option("--folds", tune_args.folds, "number of folds");
  tune->add_option("--tune-mode", tune_args.tune_mode, "refit or fast");
  tune->add_option("--restarts", tune_args.restarts, "optimizer restarts");
  tune->add_option("--seed", tune_args.seed, "RNG seed");
  tune->add_option("--out", tune_args.out_dir, "output directory");

  BenchmarkArgs bench_args;
  CLI::App* bench = app.add_subcommand("benchmark", "Run a replicated method comparison");
  bench->add_option("--config", bench_args.config_path, "JSON configuration file")->required();
  bench->add_option("--out", bench_args.out_dir, "output directory");
  bench->add_option("--jobs", bench_args.jobs, "parallel workers (overrides config)");
  bench->add_flag("--runtime", bench_args.runtime, "time each method instead of replicating");
  bench->add_option("--runtime-runs", bench_args.runtime_runs, "timed runs per method")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    fit_args.rho_set = rho_opt->count() > 0;
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (fit->parsed()) return cmd_fit(fit_args);
    if (tune->parsed()) return cmd_tune_rho(tune_args);
    if (bench->parsed()) return cmd_benchmark(bench_args);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
