#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cicm/cate.hpp"
#include "cicm/optimize.hpp"
#include "cicm/simgen.hpp"
#include "cicm/tuning.hpp"
#include "nlohmann/json.hpp"

namespace cicm {

enum class MethodId { CausalIcm, GpExp, GpObs, ExpGround };

std::string method_name(MethodId id);
MethodId parse_method(const std::string& name);

// At most one sweep axis may be populated; each value becomes a variant of
// the base configuration.
struct SweepSpec {
  std::vector<double> rho_grid;
  std::vector<KernelFamily> kernel_families;
  std::vector<int> n_obs_list;
  std::vector<double> overlap_levels;  // selection_scale values

  bool empty() const {
    return rho_grid.empty() && kernel_families.empty() && n_obs_list.empty() &&
           overlap_levels.empty();
  }
};

struct BenchmarkConfig {
  SimScenario scenario;
  std::vector<MethodId> methods = {MethodId::CausalIcm, MethodId::GpExp, MethodId::GpObs,
                                   MethodId::ExpGround};
  int replications = 20;
  std::optional<double> rho;  // nullopt = tuned per replication
  int grid_size = 50;
  std::uint64_t seed = 0;
  KernelFamily kernel = KernelFamily::RBF;
  double level = 0.95;
  int folds = 5;
  TuneMode tune_mode = TuneMode::Frozen;
  int restarts = 3;
  int jobs = 0;  // 0 = all logical cores
  SweepSpec sweeps;
};

double rmse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth);

// rate_j = fraction of replications whose interval [low_j, high_j] contains
// truth_j.
Eigen::VectorXd coverage_curve(
    const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& intervals,
    const Eigen::VectorXd& truth);

// Axis-aligned region used to separate evaluation points inside the realized
// trial support from extrapolation points.
struct SupportBox {
  Eigen::VectorXd lo, hi;
  bool contains(const Eigen::VectorXd& x) const;
};

// Univariate rule: [-2, max trial x]; multivariate: per-dimension range.
SupportBox rct_support_box(const Eigen::MatrixXd& rct_X);

// Mean squared error inside/outside the box; a side with no grid points is
// reported as absent rather than zero.
std::pair<std::optional<double>, std::optional<double>> split_support_mse(
    const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth, const Eigen::MatrixXd& grid,
    const SupportBox& support);

struct RepRecord {
  int rep = 0;
  bool ok = false;
  std::string error;
  double rmse_value = 0.0;
  double seconds = 0.0;
  double chosen_rho = 0.0;
  Eigen::VectorXd tau_mean, ci_low, ci_high;
  std::optional<double> in_mse, out_mse;
};

struct MethodAggregate {
  double mean_rmse = 0.0;
  double sd_rmse = 0.0;
  int successes = 0;
  int failures = 0;
  double mean_seconds = 0.0;
  std::optional<double> mean_in_mse, mean_out_mse;
  double mean_chosen_rho = 0.0;
  Eigen::VectorXd coverage;  // per grid point
  double mean_coverage = 0.0;
};

struct VariantResult {
  std::string label;  // "" for the base run
  SimScenario scenario;
  std::optional<double> rho;
  KernelFamily kernel = KernelFamily::RBF;
  Eigen::MatrixXd grid;
  Eigen::VectorXd true_tau;
  std::map<MethodId, std::vector<RepRecord>> records;
  std::map<MethodId, MethodAggregate> aggregates;
};

struct BenchmarkResult {
  BenchmarkConfig config;
  std::vector<VariantResult> variants;
  OptimizerAuditStats audit;  // hyperparameter searches recorded during the run
};

BenchmarkResult run_benchmark(const BenchmarkConfig& config);

struct TimingRow {
  double mean = 0.0, sd = 0.0, median = 0.0, min = 0.0, max = 0.0;
  int runs = 0;
};

// Wall-clock fit+predict timings on one fixed replication; a warm-up fit per
// method is excluded from the statistics.
std::map<MethodId, TimingRow> runtime_bench(const BenchmarkConfig& config, int runs = 5);

void write_results_csv(const std::string& path, const BenchmarkResult& result);
void write_summary_json(const std::string& path, const BenchmarkResult& result);
void write_coverage_csv(const std::string& path, const BenchmarkResult& result);
nlohmann::json summary_json(const BenchmarkResult& result);

// Strict parse: unknown fields are rejected with their JSON pointer.
BenchmarkConfig config_from_json(const nlohmann::json& j);

}  // namespace cicm
