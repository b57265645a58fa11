#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "cicm/data.hpp"
#include "cicm/kernels.hpp"
#include "cicm/optimize.hpp"
#include "nlohmann/json.hpp"

namespace cicm {

// Task-coupling matrix of the rank-2 model.  The two latent tasks are the
// experimental surface f_e and the observational surface f_o; with the
// lower-triangular loading matrix [[1, 0], [rho, sqrt(1-rho^2)]] the coupling
// reduces to unit diagonals and off-diagonal rho, so det = 1 - rho^2.
struct CoregMatrix {
  double b_e = 1.0;
  double b_o = 1.0;
  double b_eo = 0.0;
  double rho = 0.0;

  double det() const { return b_e * b_o - b_eo * b_eo; }
  Eigen::Matrix2d matrix() const {
    Eigen::Matrix2d B;
    B << b_e, b_eo, b_eo, b_o;
    return B;
  }
};

CoregMatrix coregionalization_matrix(double rho);

enum class Task { FE, FO, Eta };

struct TaskPosterior {
  double mean = 0.0;
  double variance = 0.0;
  Task task = Task::FE;
};

// Joint model over both studies for one treatment arm.  The training
// covariance is the 2x2-block matrix
//   Sigma = [ b_e  K(Xe,Xe)   b_eo K(Xe,Xo) ]
//           [ b_eo K(Xo,Xe)   b_o  K(Xo,Xo) ]  + noise_variance I,
// factorized once at fit time.  Either study may be empty.
struct IcmModel {
  double rho = 0.0;
  KernelSpec kernel;
  double noise_variance = 0.0;
  ArmDataset De;
  ArmDataset Do;
  CoregMatrix coreg;
  Eigen::MatrixXd chol;
  Eigen::VectorXd alpha;
  double jitter = 0.0;
};

// Training covariance including the noise term (no jitter), exposed for
// direct verification against the latent-coefficient construction.
Eigen::MatrixXd icm_joint_covariance(const ArmDataset& De, const ArmDataset& Do, double rho,
                                     const KernelSpec& kernel, double noise_variance);

IcmModel icm_fit(const ArmDataset& De, const ArmDataset& Do, double rho, const KernelSpec& kernel,
                 double noise_variance);

TaskPosterior icm_posterior(const IcmModel& model, const Eigen::VectorXd& xstar, Task task);
TaskPosterior icm_posterior_eta(const IcmModel& model, const Eigen::VectorXd& xstar);

// Batched versions used on evaluation grids; cov_fe_fo is the posterior
// cross-covariance between the two task values at the same point, the
// ingredient the eta variance needs beyond the marginals.
struct IcmBatchPosterior {
  Eigen::VectorXd mean_fe, var_fe;
  Eigen::VectorXd mean_fo, var_fo;
  Eigen::VectorXd cov_fe_fo;
};

IcmBatchPosterior icm_posterior_batch(const IcmModel& model, const Eigen::MatrixXd& Xstar);

double icm_log_marginal_likelihood(const IcmModel& model);

// Per-point posterior-variance comparison between the full two-study fit and
// the trial-only fit, with the (1-rho^2) lower bound and the no-inflation
// upper bound.
struct VarianceBoundRecord {
  double v_full = 0.0;
  double v_rct_only = 0.0;
  double lower = 0.0;
  bool holds_lower = false;
  bool holds_upper = false;
};

std::vector<VarianceBoundRecord> variance_bound_report(const ArmDataset& De, const ArmDataset& Do,
                                                       double rho, const KernelSpec& kernel,
                                                       double noise_variance,
                                                       const Eigen::MatrixXd& Xstar);

// Joint-likelihood hyperparameter search at fixed rho.
OptimizedHypers optimize_icm_hyperparameters(const ArmDataset& De, const ArmDataset& Do, double rho,
                                             KernelFamily family, int restarts,
                                             std::uint64_t seed);

nlohmann::json icm_summary(const IcmModel& model);

}  // namespace cicm
