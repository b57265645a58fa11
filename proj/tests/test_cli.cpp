#include <sys/wait.h>

#include <Eigen/Dense>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cicm/cate.hpp"
#include "cicm/data.hpp"
#include "cicm/gp.hpp"
#include "doctest.h"
#include "nlohmann/json.hpp"

using namespace cicm;
namespace fs = std::filesystem;

namespace {

fs::path scratch_root() {
  const fs::path p = fs::temp_directory_path() / "cicm_cli_tests";
  fs::create_directories(p);
  return p;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = scratch_root() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

// Runs the installed binary through the shell; env assignments may prefix the
// argument string.
CliRun run_cli(const std::string& args, const std::string& env = "") {
  const fs::path dir = scratch_root();
  const fs::path out_file = dir / "stdout.txt";
  const fs::path err_file = dir / "stderr.txt";
  const std::string cmd = env + (env.empty() ? "" : " ") + CICM_CLI_PATH + " " + args + " > " +
                          out_file.string() + " 2> " + err_file.string();
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
}

std::string grid_csv(const fs::path& dir) {
  const fs::path p = dir / "test.csv";
  write_text(p, "x1\n-1.5\n-1.0\n-0.5\n0.0\n0.5\n1.0\n1.5\n");
  return p.string();
}

struct PredRows {
  std::vector<double> mean, var, lo, hi;
};

PredRows read_predictions(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  REQUIRE(line == "tau_mean,tau_var,ci_low,ci_high");
  PredRows rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    REQUIRE(vals.size() == 4);
    rows.mean.push_back(vals[0]);
    rows.var.push_back(vals[1]);
    rows.lo.push_back(vals[2]);
    rows.hi.push_back(vals[3]);
  }
  return rows;
}

// results.csv without the wall-clock rows, which legitimately vary run to run
std::string results_without_timings(const fs::path& path) {
  std::ifstream in(path);
  std::string line, kept;
  while (std::getline(in, line)) {
    if (line.find(",seconds,") == std::string::npos) kept += line + "\n";
  }
  return kept;
}

}  // namespace

TEST_CASE("help exits cleanly and unknown arguments do not") {
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("simulate --help").code == 0);
  CHECK(run_cli("simulate --frobnicate 3").code == 2);
  CHECK(run_cli("").code == 2);  // a subcommand is required
}

TEST_CASE("simulate writes both studies and is seed-deterministic") {
  const fs::path d1 = fresh_dir("sim1");
  const fs::path d2 = fresh_dir("sim2");
  const std::string args = "simulate --scenario uni1 --seed 7 --pool 200 --n-obs 120 --out ";
  const CliRun r1 = run_cli(args + d1.string());
  REQUIRE(r1.code == 0);
  CHECK(fs::exists(d1 / "rct.csv"));
  CHECK(fs::exists(d1 / "obs.csv"));
  CHECK(fs::exists(d1 / "truth.json"));

  const Dataset rct = read_dataset_csv((d1 / "rct.csv").string(), Study::Experimental);
  CHECK(rct.X.rows() > 0);
  const Dataset obs = read_dataset_csv((d1 / "obs.csv").string(), Study::Observational);
  CHECK(obs.X.rows() == 120);

  const nlohmann::json truth = nlohmann::json::parse(slurp(d1 / "truth.json"));
  CHECK(truth["scenario"] == "uni1");
  CHECK(truth["seed"] == 7);
  CHECK(truth["n_obs"] == 120);
  CHECK(truth["n_rct_rows"] == rct.X.rows());

  REQUIRE(run_cli(args + d2.string()).code == 0);
  CHECK(slurp(d1 / "rct.csv") == slurp(d2 / "rct.csv"));
  CHECK(slurp(d1 / "obs.csv") == slurp(d2 / "obs.csv"));
}

TEST_CASE("simulate rejects unknown scenarios with the usage exit code") {
  const CliRun r = run_cli("simulate --scenario galaxy --out " + fresh_dir("simbad").string());
  CHECK(r.code == 2);
}

TEST_CASE("the output directory can come from the environment") {
  // Points at a directory that does not exist yet: the CLI must create it.
  const fs::path d = fresh_dir("env_out") / "nested" / "out";
  const CliRun r = run_cli("simulate --scenario uni2 --seed 3 --pool 120 --n-obs 40",
                           "CICM_OUT_DIR=" + d.string());
  REQUIRE(r.code == 0);
  CHECK(fs::exists(d / "rct.csv"));
}

TEST_CASE("malformed training files map to the usage exit code with a line number") {
  const fs::path d = fresh_dir("badcsv");
  write_text(d / "rct.csv", "x1,y,a\n0.5,not_a_number,1\n");
  write_text(d / "obs.csv", "x1,y,a\n0.5,1.0,1\n0.2,0.4,0\n");
  const std::string grid = grid_csv(d);
  const CliRun r = run_cli("fit --rct " + (d / "rct.csv").string() + " --obs " +
                           (d / "obs.csv").string() + " --test " + grid +
                           " --method gp_exp --out " + d.string());
  CHECK(r.code == 2);
  CHECK(r.err.find("line 2") != std::string::npos);
}

TEST_CASE("a study missing one arm maps to the data exit code") {
  const fs::path d = fresh_dir("one_arm");
  write_text(d / "rct.csv", "x1,y,a\n-1.0,0.2,0\n-0.5,0.4,1\n0.5,1.1,0\n1.0,2.2,1\n");
  write_text(d / "obs.csv", "x1,y,a\n-1.0,0.2,1\n0.0,0.4,1\n1.0,2.2,1\n");
  const CliRun r = run_cli("fit --rct " + (d / "rct.csv").string() + " --obs " +
                           (d / "obs.csv").string() + " --test " + grid_csv(d) +
                           " --rho 0.5 --out " + d.string());
  CHECK(r.code == 3);
}

TEST_CASE("the joint method requires an explicit coupling choice") {
  const fs::path d = fresh_dir("no_rho");
  const CliRun sim =
      run_cli("simulate --scenario uni1 --seed 5 --pool 150 --n-obs 80 --out " + d.string());
  REQUIRE(sim.code == 0);
  const CliRun r = run_cli("fit --rct " + (d / "rct.csv").string() + " --obs " +
                           (d / "obs.csv").string() + " --test " + grid_csv(d) + " --out " +
                           d.string());
  CHECK(r.code == 2);
  // but the single-study learners do not need one
  const CliRun ok = run_cli("fit --rct " + (d / "rct.csv").string() + " --obs " +
                            (d / "obs.csv").string() + " --test " + grid_csv(d) +
                            " --method gp_obs --restarts 1 --out " + d.string());
  CHECK(ok.code == 0);
  CHECK(fs::exists(d / "predictions.csv"));
}

TEST_SUITE("slow") {

TEST_CASE("a decoupled command-line fit reproduces the trial-only learner") {
  const fs::path d = fresh_dir("roundtrip");
  REQUIRE(run_cli("simulate --scenario uni1 --seed 11 --pool 300 --n-obs 150 --out " +
                  d.string())
              .code == 0);
  const std::string grid = grid_csv(d);
  const CliRun r = run_cli("fit --rct " + (d / "rct.csv").string() + " --obs " +
                           (d / "obs.csv").string() + " --test " + grid +
                           " --method causal_icm --rho 0 --restarts 2 --seed 5 --out " +
                           d.string());
  REQUIRE(r.code == 0);
  const PredRows preds = read_predictions(d / "predictions.csv");
  REQUIRE(preds.mean.size() == 7);

  // Reference 1: the library fit with identical inputs and options.
  const Dataset rct = read_dataset_csv((d / "rct.csv").string(), Study::Experimental);
  const Dataset obs = read_dataset_csv((d / "obs.csv").string(), Study::Observational);
  Eigen::MatrixXd G(7, 1);
  G << -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5;
  FitOptions opts;
  opts.restarts = 2;
  opts.seed = 5;
  const CausalIcmModel lib = fit_causal_icm_cate(rct, obs, 0.0, KernelFamily::RBF, opts);
  const auto [lm, lv] = lib.posterior(G);
  for (int i = 0; i < 7; ++i) {
    CHECK(std::abs(preds.mean[i] - lm[i]) < 1e-10);
    CHECK(std::abs(preds.var[i] - lv[i]) < 1e-10);
  }

  // Reference 2: rebuild per-arm single-task fits from the reported
  // hyperparameters; with the coupling off they must give the same effect.
  const nlohmann::json report = nlohmann::json::parse(slurp(d / "fit_report.json"));
  Standardizer std_from_report;
  const auto xm = report["x_mean"].get<std::vector<double>>();
  const auto xs = report["x_scale"].get<std::vector<double>>();
  std_from_report.mean = Eigen::Map<const Eigen::VectorXd>(xm.data(), 1);
  std_from_report.scale = Eigen::Map<const Eigen::VectorXd>(xs.data(), 1);
  const double c0 = report["y_center"][0].get<double>();
  const double c1 = report["y_center"][1].get<double>();

  const auto arms = split_by_arm(rct);
  GpModel arm_fit[2];
  for (int a = 0; a < 2; ++a) {
    const nlohmann::json& aj = report["arm" + std::to_string(a)];
    const KernelSpec kernel = kernel_from_json(aj["kernel"]);
    const double noise = aj["noise_variance"].get<double>();
    Eigen::VectorXd y = arms[a].y;
    y.array() -= (a == 0 ? c0 : c1);
    arm_fit[a] = gp_fit(std_from_report.transform(arms[a].X), y, kernel, noise);
  }
  const Eigen::MatrixXd Gs = std_from_report.transform(G);
  const GpPrediction p0 = gp_posterior(arm_fit[0], Gs);
  const GpPrediction p1 = gp_posterior(arm_fit[1], Gs);
  const double z = gaussian_quantile(0.975);
  for (int i = 0; i < 7; ++i) {
    const double mean = (p1.mean[i] + c1) - (p0.mean[i] + c0);
    const double var = p1.variance[i] + p0.variance[i];
    CHECK(std::abs(preds.mean[i] - mean) < 1e-10);
    CHECK(std::abs(preds.var[i] - var) < 1e-10);
    CHECK(std::abs(preds.lo[i] - (mean - z * std::sqrt(var))) < 1e-8);
    CHECK(std::abs(preds.hi[i] - (mean + z * std::sqrt(var))) < 1e-8);
  }
}

TEST_CASE("cross-validated coupling selection runs end to end") {
  const fs::path d = fresh_dir("autorho");
  REQUIRE(run_cli("simulate --scenario uni1 --seed 13 --pool 150 --n-obs 100 --out " +
                  d.string())
              .code == 0);
  const CliRun tune = run_cli("tune-rho --rct " + (d / "rct.csv").string() + " --obs " +
                              (d / "obs.csv").string() +
                              " --tune-mode fast --restarts 1 --seed 3 --out " + d.string());
  REQUIRE(tune.code == 0);
  CHECK(tune.out.find("chosen rho") != std::string::npos);
  const nlohmann::json sel = nlohmann::json::parse(slurp(d / "rho_selection.json"));
  REQUIRE(sel["grid"].size() == 11);
  REQUIRE(sel["losses"].size() == 11);
  const double chosen = sel["chosen_rho"].get<double>();
  bool on_grid = false;
  for (const auto& g : sel["grid"]) {
    if (std::abs(g.get<double>() - chosen) < 1e-12) on_grid = true;
  }
  CHECK(on_grid);

  const CliRun fit = run_cli("fit --rct " + (d / "rct.csv").string() + " --obs " +
                             (d / "obs.csv").string() + " --test " + grid_csv(d) +
                             " --auto-rho --tune-mode fast --restarts 1 --seed 3 --out " +
                             d.string());
  REQUIRE(fit.code == 0);
  const nlohmann::json report = nlohmann::json::parse(slurp(d / "fit_report.json"));
  CHECK(report.contains("rho_selection"));
  CHECK(report["rho"].get<double>() ==
        doctest::Approx(report["rho_selection"]["chosen_rho"].get<double>()));
}

TEST_CASE("benchmark runs from a config file and is deterministic") {
  const fs::path d1 = fresh_dir("bench1");
  const fs::path d2 = fresh_dir("bench2");
  const fs::path cfg = scratch_root() / "bench_config.json";
  write_text(cfg, R"({
  "scenario": "uni1",
  "pool_size": 150,
  "n_obs": 100,
  "replications": 1,
  "grid_size": 8,
  "methods": ["gp_exp"],
  "restarts": 1,
  "rho": 0.5,
  "seed": 9,
  "jobs": 1
})");
  const CliRun r1 = run_cli("benchmark --config " + cfg.string() + " --out " + d1.string());
  REQUIRE(r1.code == 0);
  CHECK(fs::exists(d1 / "results.csv"));
  CHECK(fs::exists(d1 / "summary.json"));
  CHECK(fs::exists(d1 / "coverage.csv"));
  const nlohmann::json summary = nlohmann::json::parse(slurp(d1 / "summary.json"));
  CHECK(summary["variants"][0]["methods"].contains("gp_exp"));

  REQUIRE(run_cli("benchmark --config " + cfg.string() + " --out " + d2.string()).code == 0);
  CHECK(results_without_timings(d1 / "results.csv") ==
        results_without_timings(d2 / "results.csv"));
}

TEST_CASE("benchmark configs with unknown methods fail fast") {
  const fs::path d = fresh_dir("benchbad");
  const fs::path cfg = scratch_root() / "bad_config.json";
  write_text(cfg, R"({"scenario": "uni1", "methods": ["gp_exp", "telepathy"]})");
  CHECK(run_cli("benchmark --config " + cfg.string() + " --out " + d.string()).code == 2);

  const fs::path cfg2 = scratch_root() / "unknown_field.json";
  write_text(cfg2, R"({"scenario": "uni1", "reps": 3})");
  const CliRun r = run_cli("benchmark --config " + cfg2.string() + " --out " + d.string());
  CHECK(r.code == 2);
  CHECK(r.err.find("/reps") != std::string::npos);
}

TEST_CASE("the runtime mode reports timing statistics per method") {
  const fs::path d = fresh_dir("runtime");
  const fs::path cfg = scratch_root() / "runtime_config.json";
  write_text(cfg, R"({
  "scenario": "uni1",
  "pool_size": 120,
  "n_obs": 80,
  "replications": 1,
  "grid_size": 8,
  "methods": ["gp_exp"],
  "restarts": 1,
  "rho": 0.5,
  "seed": 4,
  "jobs": 1
})");
  const CliRun r = run_cli("benchmark --config " + cfg.string() +
                           " --runtime --runtime-runs 2 --out " + d.string());
  REQUIRE(r.code == 0);
  const nlohmann::json timings = nlohmann::json::parse(slurp(d / "timings.json"));
  REQUIRE(timings.contains("gp_exp"));
  CHECK(timings["gp_exp"]["runs"] == 2);
  CHECK(timings["gp_exp"]["mean_seconds"].get<double>() >= 0.0);
}

}  // TEST_SUITE("slow")
