#include "cicm/cate.hpp"

#include <cmath>
#include <string>

#include "cicm/errors.hpp"
#include "cicm/rng.hpp"

namespace cicm {

double gaussian_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ValidationError("gaussian_quantile: p must lie strictly in (0, 1)");
  }
  // Acklam's rational approximation, then one Halley refinement.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= phigh) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

std::vector<CatePosterior> CateEstimator::predict(const Eigen::MatrixXd& Xstar,
                                                  double level) const {
  if (!(level > 0.0 && level < 1.0)) {
    throw ValidationError("predict: level must lie strictly in (0, 1)");
  }
  const auto [mean, variance] = posterior(Xstar);
  const double z = gaussian_quantile(0.5 * (1.0 + level));
  std::vector<CatePosterior> out(static_cast<std::size_t>(mean.size()));
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    CatePosterior& p = out[static_cast<std::size_t>(i)];
    p.mean = mean[i];
    p.variance = variance[i];
    const double half = z * std::sqrt(variance[i]);
    p.ci_low = p.mean - half;
    p.ci_high = p.mean + half;
    p.level = level;
  }
  return out;
}

namespace {

struct SplitStudy {
  ArmDataset arm[2];
};

SplitStudy split_and_check(const Dataset& data, const std::string& label) {
  validate_dataset(data, label);
  auto cells = split_by_arm(data);
  for (int a = 0; a < 2; ++a) {
    if (cells[static_cast<std::size_t>(a)].empty()) {
      throw DataShapeError(label + ": treatment arm " + std::to_string(a) + " is empty");
    }
  }
  return {{cells[0], cells[1]}};
}

double center_of(const Eigen::VectorXd& y) { return y.size() > 0 ? y.mean() : 0.0; }

}  // namespace

CausalIcmModel fit_causal_icm_cate(const Dataset& rct, const Dataset& obs,
                                   std::optional<double> rho, KernelFamily family,
                                   const FitOptions& opts) {
  if (rho) coregionalization_matrix(*rho);  // range check before any work
  SplitStudy e = split_and_check(rct, "trial data");
  SplitStudy o = split_and_check(obs, "observational data");
  if (rct.X.cols() != obs.X.cols()) {
    throw DataShapeError("trial and observational covariate dimensions differ");
  }

  CausalIcmModel model;
  if (opts.x_standardizer) {
    model.xstd = *opts.x_standardizer;
  } else {
    Eigen::MatrixXd pooled(rct.X.rows() + obs.X.rows(), rct.X.cols());
    pooled << rct.X, obs.X;
    model.xstd = Standardizer::fit(pooled);
  }

  for (int a = 0; a < 2; ++a) {
    e.arm[a].X = model.xstd.transform(e.arm[a].X);
    o.arm[a].X = model.xstd.transform(o.arm[a].X);
    if (opts.center_outcomes) {
      Eigen::VectorXd pooled_y(e.arm[a].y.size() + o.arm[a].y.size());
      pooled_y << e.arm[a].y, o.arm[a].y;
      model.y_center[a] = center_of(pooled_y);
      e.arm[a].y.array() -= model.y_center[a];
      o.arm[a].y.array() -= model.y_center[a];
    }
  }

  if (rho) {
    model.rho = *rho;
  } else {
    // Overlap weights come from one propensity fit on full study covariates.
    const Eigen::MatrixXd Xe = model.xstd.transform(rct.X);
    const Eigen::MatrixXd Xo = model.xstd.transform(obs.X);
    const LogisticModel prop = fit_study_propensity(Xe, Xo);
    std::vector<RhoTuneArm> arms(2);
    for (int a = 0; a < 2; ++a) {
      arms[static_cast<std::size_t>(a)].De = e.arm[a];
      arms[static_cast<std::size_t>(a)].Do = o.arm[a];
      arms[static_cast<std::size_t>(a)].weights = propensity_weights(prop, e.arm[a].X);
    }
    TuneOptions topts;
    topts.folds = opts.folds;
    topts.mode = opts.tune_mode;
    topts.family = family;
    topts.restarts = opts.restarts;
    topts.seed = mix_seed(opts.seed, 555);
    model.selection = tune_rho_weighted(arms, opts.rho_grid, topts);
    model.rho = model.selection->chosen_rho;
  }

  for (int a = 0; a < 2; ++a) {
    KernelSpec kernel;
    double noise;
    if (opts.fixed_arm_hypers) {
      kernel = opts.fixed_arm_hypers->kernel[a];
      noise = opts.fixed_arm_hypers->noise[a];
      model.arm_hypers[a] = {};
    } else if (opts.fixed_kernel) {
      kernel = *opts.fixed_kernel;
      noise = opts.fixed_noise.value_or(1e-6);
      model.arm_hypers[a] = {};
    } else if (model.selection && model.selection->frozen_hypers.size() == 2) {
      // Frozen tuning already searched each arm's hyperparameters on the
      // full data at rho = 0.5; the final fit reuses that result.
      model.arm_hypers[a] = model.selection->frozen_hypers[static_cast<std::size_t>(a)];
      kernel = model.arm_hypers[a].kernel;
      noise = model.arm_hypers[a].noise_variance;
    } else {
      model.arm_hypers[a] = optimize_icm_hyperparameters(
          e.arm[a], o.arm[a], model.rho, family, opts.restarts,
          mix_seed(opts.seed, 10 + static_cast<std::uint64_t>(a)));
      kernel = model.arm_hypers[a].kernel;
      noise = model.arm_hypers[a].noise_variance;
    }
    model.arm_model[a] = icm_fit(e.arm[a], o.arm[a], model.rho, kernel, noise);
  }
  return model;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> CausalIcmModel::posterior(
    const Eigen::MatrixXd& Xstar) const {
  const Eigen::MatrixXd Xs = xstd.transform(Xstar);
  const IcmBatchPosterior p0 = icm_posterior_batch(arm_model[0], Xs);
  const IcmBatchPosterior p1 = icm_posterior_batch(arm_model[1], Xs);
  Eigen::VectorXd mean =
      (p1.mean_fe.array() + y_center[1]) - (p0.mean_fe.array() + y_center[0]);
  Eigen::VectorXd variance = p1.var_fe + p0.var_fe;
  return {std::move(mean), std::move(variance)};
}

nlohmann::json CausalIcmModel::report() const {
  nlohmann::json j;
  j["method"] = "causal_icm";
  j["rho"] = rho;
  if (selection) j["rho_selection"] = rho_selection_to_json(*selection);
  j["x_mean"] = std::vector<double>(xstd.mean.begin(), xstd.mean.end());
  j["x_scale"] = std::vector<double>(xstd.scale.begin(), xstd.scale.end());
  j["y_center"] = {y_center[0], y_center[1]};
  for (int a = 0; a < 2; ++a) {
    j["arm" + std::to_string(a)] = icm_summary(arm_model[a]);
  }
  return j;
}

GpTlearner fit_tlearner_gp(const Dataset& data, KernelFamily family, const FitOptions& opts) {
  SplitStudy cells = split_and_check(data, "training data");

  GpTlearner model;
  model.xstd = opts.x_standardizer ? *opts.x_standardizer : Standardizer::fit(data.X);
  for (int a = 0; a < 2; ++a) {
    ArmDataset cell = cells.arm[a];
    cell.X = model.xstd.transform(cell.X);
    if (opts.center_outcomes) {
      model.y_center[a] = center_of(cell.y);
      cell.y.array() -= model.y_center[a];
    }
    KernelSpec kernel;
    double noise;
    if (opts.fixed_kernel) {
      kernel = *opts.fixed_kernel;
      noise = opts.fixed_noise.value_or(1e-6);
      model.arm_hypers[a] = {};
    } else {
      model.arm_hypers[a] = optimize_hyperparameters(
          cell.X, cell.y, family, opts.restarts,
          mix_seed(opts.seed, 20 + static_cast<std::uint64_t>(a)));
      kernel = model.arm_hypers[a].kernel;
      noise = model.arm_hypers[a].noise_variance;
    }
    model.arm_model[a] = gp_fit(cell.X, cell.y, kernel, noise);
  }
  return model;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> GpTlearner::posterior(
    const Eigen::MatrixXd& Xstar) const {
  const Eigen::MatrixXd Xs = xstd.transform(Xstar);
  const GpPrediction p0 = gp_posterior(arm_model[0], Xs);
  const GpPrediction p1 = gp_posterior(arm_model[1], Xs);
  Eigen::VectorXd mean = (p1.mean.array() + y_center[1]) - (p0.mean.array() + y_center[0]);
  Eigen::VectorXd variance = p1.variance + p0.variance;
  return {std::move(mean), std::move(variance)};
}

nlohmann::json GpTlearner::report() const {
  nlohmann::json j;
  j["method"] = "gp_tlearner";
  j["x_mean"] = std::vector<double>(xstd.mean.begin(), xstd.mean.end());
  j["x_scale"] = std::vector<double>(xstd.scale.begin(), xstd.scale.end());
  j["y_center"] = {y_center[0], y_center[1]};
  for (int a = 0; a < 2; ++a) {
    j["arm" + std::to_string(a)] = {
        {"kernel", kernel_to_json(arm_model[a].kernel)},
        {"noise_variance", arm_model[a].noise_variance},
        {"log_marginal_likelihood", log_marginal_likelihood(arm_model[a])}};
  }
  return j;
}

ExperimentalGrounding fit_experimental_grounding(const Dataset& rct, const Dataset& obs,
                                                 KernelFamily family, double treat_prob,
                                                 const FitOptions& opts) {
  if (!(treat_prob > 0.0 && treat_prob < 1.0)) {
    throw ValidationError("fit_experimental_grounding: treatment probability must be in (0, 1)");
  }
  validate_dataset(rct, "trial data");
  if (rct.X.cols() != obs.X.cols()) {
    throw DataShapeError("trial and observational covariate dimensions differ");
  }

  ExperimentalGrounding model;
  model.treat_prob = treat_prob;
  model.obs_model = fit_tlearner_gp(obs, family, opts);

  const Eigen::Index n = rct.X.rows(), p = rct.X.cols();
  if (n < p + 1) {
    throw DataShapeError("fit_experimental_grounding: trial too small for the linear correction");
  }
  const double e = treat_prob;
  Eigen::VectorXd psi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    psi[i] = rct.y[i] * (rct.a[i] - e) / (e * (1.0 - e));
  }
  const Eigen::VectorXd omega = model.obs_model.posterior(rct.X).first;
  const Eigen::VectorXd resid = psi - omega;

  Eigen::MatrixXd Z(n, p + 1);
  Z.col(0).setOnes();
  Z.rightCols(p) = rct.X;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
  if (qr.rank() == p + 1) {
    model.theta = qr.solve(resid);
  } else {
    Eigen::MatrixXd A = Z.transpose() * Z;
    A.diagonal().array() += 1e-6;
    model.theta = A.ldlt().solve(Z.transpose() * resid);
    model.used_ridge = true;
  }
  return model;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> ExperimentalGrounding::posterior(
    const Eigen::MatrixXd& Xstar) const {
  auto [omega, variance] = obs_model.posterior(Xstar);
  Eigen::VectorXd mean = omega;
  mean.array() += theta[0];
  mean += Xstar * theta.tail(Xstar.cols());
  return {std::move(mean), std::move(variance)};
}

nlohmann::json ExperimentalGrounding::report() const {
  nlohmann::json j;
  j["method"] = "experimental_grounding";
  j["theta"] = std::vector<double>(theta.begin(), theta.end());
  j["treat_prob"] = treat_prob;
  j["used_ridge"] = used_ridge;
  j["obs_model"] = obs_model.report();
  return j;
}

}  // namespace cicm
