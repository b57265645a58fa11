#pragma once

#include <Eigen/Dense>

#include "cicm/kernels.hpp"

namespace cicm {

// Single-task GP regression model with cached Cholesky factor.
struct GpModel {
  KernelSpec kernel;
  double noise_variance = 0.0;
  Eigen::MatrixXd X_train;
  Eigen::VectorXd y_train;
  Eigen::MatrixXd chol;   // lower factor of K(X,X) + noise_variance I (+ jitter)
  Eigen::VectorXd alpha;  // (K + noise_variance I)^{-1} y
  double jitter = 0.0;
};

struct GpPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

GpModel gp_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const KernelSpec& kernel,
               double noise_variance);

GpPrediction gp_posterior(const GpModel& model, const Eigen::MatrixXd& Xstar);

double log_marginal_likelihood(const GpModel& model);

}  // namespace cicm
