#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "cicm/data.hpp"
#include "cicm/kernels.hpp"
#include "cicm/optimize.hpp"
#include "nlohmann/json.hpp"

namespace cicm {

// Ridge-regularized logistic regression for study membership (label 1 =
// observational), fitted by IRLS.  Supplies the overlap weights for the rho
// cross-validation objective.
struct LogisticModel {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  double ridge_lambda = 0.0;
};

LogisticModel fit_study_propensity(const Eigen::MatrixXd& Xe, const Eigen::MatrixXd& Xo);

// P(S = o | x), strictly inside (0, 1).
Eigen::VectorXd predict_propensity(const LogisticModel& model, const Eigen::MatrixXd& X);

// w(x) = 1 / (1 - min(p, 0.99)); bounded in [1, 100].
Eigen::VectorXd propensity_weights(const LogisticModel& model, const Eigen::MatrixXd& X);

// Whether kernel hyperparameters are re-optimized for every (fold, rho) fit
// or frozen from a single full-data fit at rho = 0.5.
enum class TuneMode { Refit, Frozen };

struct RhoSelection {
  std::vector<double> grid;
  std::vector<double> losses;
  double chosen_rho = 0.0;
  // fold_assignments[arm][i] = fold of trial point i within that arm
  std::vector<std::vector<int>> fold_assignments;
  // Frozen mode only: the per-arm hyperparameters optimized once at rho = 0.5,
  // reusable by the caller so the final fit skips a second search.
  std::vector<OptimizedHypers> frozen_hypers;
};

// One treatment arm's contribution to the tuning objective: its two study
// blocks plus the per-trial-point overlap weights.
struct RhoTuneArm {
  ArmDataset De;
  ArmDataset Do;
  Eigen::VectorXd weights;  // one per row of De.X
};

struct TuneOptions {
  int folds = 5;
  TuneMode mode = TuneMode::Refit;
  KernelFamily family = KernelFamily::RBF;
  int restarts = 3;
  std::uint64_t seed = 0;
};

// Weighted K-fold selection of rho over a grid.  For each fold and grid
// value, the joint model is fitted on (trial training folds + all
// observational rows) and scored by the weighted squared error of the
// experimental-task posterior mean on the held-out trial rows; losses are
// summed over folds and arms (then divided by the number of arms).  Ties
// break toward the smaller rho.
RhoSelection tune_rho_weighted(const std::vector<RhoTuneArm>& arms,
                               const std::vector<double>& grid, const TuneOptions& opts);

// Single-model convenience wrapper: fits the propensity on (De.X, Do.X) and
// runs tune_rho_weighted with one arm.
RhoSelection tune_rho(const ArmDataset& De, const ArmDataset& Do, const std::vector<double>& grid,
                      int folds, std::uint64_t seed, KernelFamily family = KernelFamily::RBF,
                      TuneMode mode = TuneMode::Refit, int restarts = 3);

std::vector<double> default_rho_grid();

nlohmann::json rho_selection_to_json(const RhoSelection& sel);

}  // namespace cicm
