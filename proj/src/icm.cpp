#include "cicm/icm.hpp"

#include <cmath>
#include <string>

#include "cicm/errors.hpp"
#include "cicm/gp.hpp"
#include "cicm/linalg.hpp"

namespace cicm {

CoregMatrix coregionalization_matrix(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw ValidationError("rho must lie in [0, 1], got " + std::to_string(rho));
  }
  CoregMatrix B;
  B.b_e = 1.0;
  B.b_o = 1.0;
  B.b_eo = rho;
  B.rho = rho;
  return B;
}

namespace {

void check_block(const ArmDataset& d, const KernelSpec& kernel, const char* label) {
  if (d.X.rows() != d.y.size()) {
    throw DataShapeError(std::string(label) + ": X has " + std::to_string(d.X.rows()) +
                         " rows but y has " + std::to_string(d.y.size()) + " entries");
  }
  if (d.X.rows() > 0 && d.X.cols() != kernel.lengthscales.size()) {
    throw DataShapeError(std::string(label) + ": covariate dimension " +
                         std::to_string(d.X.cols()) + " does not match kernel dimension " +
                         std::to_string(kernel.lengthscales.size()));
  }
}

}  // namespace

Eigen::MatrixXd icm_joint_covariance(const ArmDataset& De, const ArmDataset& Do, double rho,
                                     const KernelSpec& kernel, double noise_variance) {
  const CoregMatrix B = coregionalization_matrix(rho);
  const Eigen::Index ne = De.n(), no = Do.n(), n = ne + no;
  Eigen::MatrixXd S(n, n);
  if (ne > 0) S.topLeftCorner(ne, ne) = B.b_e * kernel_matrix(kernel, De.X);
  if (no > 0) S.bottomRightCorner(no, no) = B.b_o * kernel_matrix(kernel, Do.X);
  if (ne > 0 && no > 0) {
    const Eigen::MatrixXd C = B.b_eo * kernel_matrix(kernel, De.X, Do.X);
    S.topRightCorner(ne, no) = C;
    S.bottomLeftCorner(no, ne) = C.transpose();
  }
  S.diagonal().array() += noise_variance;
  return S;
}

IcmModel icm_fit(const ArmDataset& De, const ArmDataset& Do, double rho, const KernelSpec& kernel,
                 double noise_variance) {
  validate_kernel_spec(kernel);
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
    throw ValidationError("icm_fit: noise_variance must be positive and finite");
  }
  check_block(De, kernel, "icm_fit: experimental data");
  check_block(Do, kernel, "icm_fit: observational data");

  IcmModel model;
  model.rho = rho;
  model.kernel = kernel;
  model.noise_variance = noise_variance;
  model.De = De;
  model.Do = Do;
  model.coreg = coregionalization_matrix(rho);

  const Eigen::Index n = De.n() + Do.n();
  if (n == 0) {
    // Empty model: posterior queries fall back to the prior.
    model.chol.resize(0, 0);
    model.alpha.resize(0);
    return model;
  }

  const Eigen::MatrixXd S = icm_joint_covariance(De, Do, rho, kernel, noise_variance);
  CholFactor f = cholesky_with_jitter(S);
  model.chol = std::move(f.L);
  model.jitter = f.jitter;
  Eigen::VectorXd y(n);
  y.head(De.n()) = De.y;
  y.tail(Do.n()) = Do.y;
  model.alpha = chol_solve(model.chol, y);
  return model;
}

IcmBatchPosterior icm_posterior_batch(const IcmModel& model, const Eigen::MatrixXd& Xstar) {
  const Eigen::Index m = Xstar.rows(), ne = model.De.n(), no = model.Do.n(), n = ne + no;
  const CoregMatrix& B = model.coreg;
  const double kss = model.kernel.variance;  // stationary: k(x,x) is the signal variance

  IcmBatchPosterior out;
  out.mean_fe = Eigen::VectorXd::Zero(m);
  out.mean_fo = Eigen::VectorXd::Zero(m);
  out.var_fe = Eigen::VectorXd::Constant(m, B.b_e * kss);
  out.var_fo = Eigen::VectorXd::Constant(m, B.b_o * kss);
  out.cov_fe_fo = Eigen::VectorXd::Constant(m, B.b_eo * kss);
  if (n == 0) return out;

  // Cross-covariances between training points and the two task values at x*.
  Eigen::MatrixXd Ce, Co;
  if (ne > 0) Ce = kernel_matrix(model.kernel, model.De.X, Xstar);  // ne x m
  if (no > 0) Co = kernel_matrix(model.kernel, model.Do.X, Xstar);  // no x m

  Eigen::MatrixXd cross_fe(n, m), cross_fo(n, m);
  if (ne > 0) {
    cross_fe.topRows(ne) = B.b_e * Ce;
    cross_fo.topRows(ne) = B.b_eo * Ce;
  }
  if (no > 0) {
    cross_fe.bottomRows(no) = B.b_eo * Co;
    cross_fo.bottomRows(no) = B.b_o * Co;
  }

  out.mean_fe = cross_fe.transpose() * model.alpha;
  out.mean_fo = cross_fo.transpose() * model.alpha;
  const Eigen::MatrixXd Ve = model.chol.triangularView<Eigen::Lower>().solve(cross_fe);
  const Eigen::MatrixXd Vo = model.chol.triangularView<Eigen::Lower>().solve(cross_fo);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double vfe = B.b_e * kss - Ve.col(j).squaredNorm();
    const double vfo = B.b_o * kss - Vo.col(j).squaredNorm();
    out.var_fe[j] = vfe < 0.0 ? 0.0 : vfe;
    out.var_fo[j] = vfo < 0.0 ? 0.0 : vfo;
    out.cov_fe_fo[j] = B.b_eo * kss - Ve.col(j).dot(Vo.col(j));
  }
  return out;
}

TaskPosterior icm_posterior(const IcmModel& model, const Eigen::VectorXd& xstar, Task task) {
  if (task == Task::Eta) return icm_posterior_eta(model, xstar);
  const IcmBatchPosterior b = icm_posterior_batch(model, xstar.transpose());
  TaskPosterior out;
  out.task = task;
  if (task == Task::FE) {
    out.mean = b.mean_fe[0];
    out.variance = b.var_fe[0];
  } else {
    out.mean = b.mean_fo[0];
    out.variance = b.var_fo[0];
  }
  return out;
}

TaskPosterior icm_posterior_eta(const IcmModel& model, const Eigen::VectorXd& xstar) {
  const IcmBatchPosterior b = icm_posterior_batch(model, xstar.transpose());
  TaskPosterior out;
  out.task = Task::Eta;
  out.mean = b.mean_fe[0] - b.mean_fo[0];
  const double v = b.var_fe[0] + b.var_fo[0] - 2.0 * b.cov_fe_fo[0];
  out.variance = v < 0.0 ? 0.0 : v;
  return out;
}

double icm_log_marginal_likelihood(const IcmModel& model) {
  const Eigen::Index n = model.De.n() + model.Do.n();
  if (n == 0) return 0.0;
  Eigen::VectorXd y(n);
  y.head(model.De.n()) = model.De.y;
  y.tail(model.Do.n()) = model.Do.y;
  const double quad = y.dot(model.alpha);
  const double logdet_half = model.chol.diagonal().array().log().sum();
  return -0.5 * quad - logdet_half - 0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
}

std::vector<VarianceBoundRecord> variance_bound_report(const ArmDataset& De, const ArmDataset& Do,
                                                       double rho, const KernelSpec& kernel,
                                                       double noise_variance,
                                                       const Eigen::MatrixXd& Xstar) {
  const IcmModel full = icm_fit(De, Do, rho, kernel, noise_variance);
  const IcmModel rct_only = icm_fit(De, ArmDataset{}, rho, kernel, noise_variance);
  const IcmBatchPosterior pf = icm_posterior_batch(full, Xstar);
  const IcmBatchPosterior pr = icm_posterior_batch(rct_only, Xstar);

  std::vector<VarianceBoundRecord> out(static_cast<std::size_t>(Xstar.rows()));
  const double shrink = 1.0 - rho * rho;
  for (Eigen::Index j = 0; j < Xstar.rows(); ++j) {
    VarianceBoundRecord& r = out[static_cast<std::size_t>(j)];
    r.v_full = pf.var_fe[j];
    r.v_rct_only = pr.var_fe[j];
    r.lower = shrink * r.v_rct_only;
    r.holds_lower = r.v_full >= r.lower - 1e-10;
    r.holds_upper = r.v_full <= r.v_rct_only + 1e-10;
  }
  return out;
}

OptimizedHypers optimize_icm_hyperparameters(const ArmDataset& De, const ArmDataset& Do, double rho,
                                             KernelFamily family, int restarts,
                                             std::uint64_t seed) {
  const Eigen::Index n = De.n() + Do.n();
  if (n < 2) {
    throw DataShapeError("optimize_icm_hyperparameters: need at least 2 training points");
  }
  const Eigen::Index dim = De.n() > 0 ? De.X.cols() : Do.X.cols();
  Eigen::VectorXd y(n);
  y.head(De.n()) = De.y;
  y.tail(Do.n()) = Do.y;
  auto objective = [&](const KernelSpec& spec, double noise) {
    return icm_log_marginal_likelihood(icm_fit(De, Do, rho, spec, noise));
  };
  return optimize_kernel_hyperparameters(objective, dim, family, y, restarts, seed);
}

nlohmann::json icm_summary(const IcmModel& model) {
  return {{"rho", model.rho},
          {"kernel", kernel_to_json(model.kernel)},
          {"noise_variance", model.noise_variance},
          {"n_experimental", model.De.n()},
          {"n_observational", model.Do.n()},
          {"log_marginal_likelihood", icm_log_marginal_likelihood(model)},
          {"jitter", model.jitter}};
}

}  // namespace cicm
