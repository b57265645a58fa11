#include "cicm/gp.hpp"

#include <cmath>
#include <string>

#include "cicm/errors.hpp"
#include "cicm/linalg.hpp"

namespace cicm {

CholFactor cholesky_with_jitter(const Eigen::MatrixXd& A) {
  const Eigen::Index n = A.rows();
  const double mean_diag = n > 0 ? A.diagonal().mean() : 0.0;
  double eps = 0.0;
  for (int attempt = 0; attempt <= 7; ++attempt) {
    Eigen::MatrixXd M = A;
    if (attempt > 0) {
      eps = (attempt == 1) ? 1e-10 * mean_diag : eps * 10.0;
      M.diagonal().array() += eps;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() == Eigen::Success) {
      return {llt.matrixL(), attempt > 0 ? eps : 0.0};
    }
  }
  throw NumericalError("Cholesky failed after jitter ladder (n=" + std::to_string(n) +
                       ", mean diag=" + std::to_string(mean_diag) +
                       ", last jitter=" + std::to_string(eps) + ")");
}

Eigen::VectorXd chol_solve(const Eigen::MatrixXd& L, const Eigen::VectorXd& b) {
  Eigen::VectorXd x = L.triangularView<Eigen::Lower>().solve(b);
  return L.triangularView<Eigen::Lower>().transpose().solve(x);
}

GpModel gp_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const KernelSpec& kernel,
               double noise_variance) {
  validate_kernel_spec(kernel);
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
    throw ValidationError("gp_fit: noise_variance must be positive and finite");
  }
  if (X.rows() == 0) {
    throw DataShapeError("gp_fit: empty training set");
  }
  if (X.rows() != y.size()) {
    throw DataShapeError("gp_fit: X has " + std::to_string(X.rows()) + " rows but y has " +
                         std::to_string(y.size()) + " entries");
  }

  GpModel model;
  model.kernel = kernel;
  model.noise_variance = noise_variance;
  model.X_train = X;
  model.y_train = y;

  Eigen::MatrixXd K = kernel_matrix(kernel, X);
  K.diagonal().array() += noise_variance;
  CholFactor f = cholesky_with_jitter(K);
  model.chol = std::move(f.L);
  model.jitter = f.jitter;
  model.alpha = chol_solve(model.chol, y);
  return model;
}

GpPrediction gp_posterior(const GpModel& model, const Eigen::MatrixXd& Xstar) {
  const Eigen::Index m = Xstar.rows();
  Eigen::MatrixXd Kx = kernel_matrix(model.kernel, model.X_train, Xstar);  // n x m
  GpPrediction out;
  out.mean = Kx.transpose() * model.alpha;
  Eigen::MatrixXd V = model.chol.triangularView<Eigen::Lower>().solve(Kx);
  out.variance.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double v = model.kernel.variance - V.col(j).squaredNorm();
    out.variance[j] = v < 0.0 ? 0.0 : v;
  }
  return out;
}

double log_marginal_likelihood(const GpModel& model) {
  const double n = static_cast<double>(model.y_train.size());
  const double quad = model.y_train.dot(model.alpha);
  const double logdet_half = model.chol.diagonal().array().log().sum();
  return -0.5 * quad - logdet_half - 0.5 * n * std::log(2.0 * M_PI);
}

}  // namespace cicm
