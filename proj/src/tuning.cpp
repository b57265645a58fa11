#include "cicm/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cicm/errors.hpp"
#include "cicm/icm.hpp"
#include "cicm/rng.hpp"

namespace cicm {

namespace {

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace

LogisticModel fit_study_propensity(const Eigen::MatrixXd& Xe, const Eigen::MatrixXd& Xo) {
  if (Xe.rows() < 1 || Xo.rows() < 1) {
    throw DataShapeError("fit_study_propensity: both studies need at least one row");
  }
  if (Xe.cols() != Xo.cols()) {
    throw DataShapeError("fit_study_propensity: covariate dimensions differ between studies");
  }
  const Eigen::Index ne = Xe.rows(), no = Xo.rows(), n = ne + no, p = Xe.cols();

  Eigen::MatrixXd Z(n, p);
  Z.topRows(ne) = Xe;
  Z.bottomRows(no) = Xo;
  Eigen::VectorXd t(n);
  t.head(ne).setZero();
  t.tail(no).setOnes();

  // Standardized design stabilizes IRLS; coefficients are mapped back below.
  const Standardizer std_ = Standardizer::fit(Z);
  const Eigen::MatrixXd Zs = std_.transform(Z);

  const double base_lambda = 1e-4 * static_cast<double>(n);
  for (int attempt = 0; attempt <= 3; ++attempt) {
    const double lambda = base_lambda * std::pow(10.0, attempt);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);  // [intercept, coefs]
    bool diverged = false;
    for (int iter = 0; iter < 100; ++iter) {
      const Eigen::VectorXd eta =
          Eigen::VectorXd::Constant(n, beta[0]) + Zs * beta.tail(p);
      Eigen::VectorXd prob(n), w(n), z(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        prob[i] = sigmoid(eta[i]);
        w[i] = std::max(prob[i] * (1.0 - prob[i]), 1e-10);
        z[i] = eta[i] + (t[i] - prob[i]) / w[i];
      }
      Eigen::MatrixXd D(n, p + 1);
      D.col(0).setOnes();
      D.rightCols(p) = Zs;
      Eigen::MatrixXd A = D.transpose() * w.asDiagonal() * D;
      for (Eigen::Index j = 1; j <= p; ++j) A(j, j) += lambda;  // intercept unpenalized
      const Eigen::VectorXd rhs = D.transpose() * (w.asDiagonal() * z);
      const Eigen::VectorXd beta_new = A.ldlt().solve(rhs);
      if (!beta_new.allFinite()) {
        diverged = true;
        break;
      }
      const double delta = (beta_new - beta).lpNorm<Eigen::Infinity>();
      beta = beta_new;
      if (delta < 1e-8) break;
    }
    if (!diverged) {
      LogisticModel model;
      model.ridge_lambda = lambda;
      model.coefficients = (beta.tail(p).array() / std_.scale.array()).matrix();
      model.intercept = beta[0] - model.coefficients.dot(std_.mean);
      return model;
    }
  }
  throw NumericalError("fit_study_propensity: IRLS diverged at every ridge level");
}

Eigen::VectorXd predict_propensity(const LogisticModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.coefficients.size()) {
    throw DataShapeError("predict_propensity: covariate dimension mismatch");
  }
  Eigen::VectorXd p(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    p[i] = sigmoid(model.intercept + model.coefficients.dot(X.row(i)));
  }
  return p;
}

Eigen::VectorXd propensity_weights(const LogisticModel& model, const Eigen::MatrixXd& X) {
  Eigen::VectorXd p = predict_propensity(model, X);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    p[i] = 1.0 / (1.0 - std::min(p[i], 0.99));
  }
  return p;
}

namespace {

std::vector<int> make_fold_assignment(Eigen::Index n, int folds, std::uint64_t seed) {
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Philox gen(seed);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const Eigen::Index j = static_cast<Eigen::Index>(gen.uniform() * static_cast<double>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    fold[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
        static_cast<int>(i % folds);
  }
  return fold;
}

ArmDataset take_rows(const ArmDataset& d, const std::vector<int>& fold, int f, bool keep_fold) {
  Eigen::Index n = 0;
  for (std::size_t i = 0; i < fold.size(); ++i) n += ((fold[i] == f) == keep_fold);
  ArmDataset out;
  out.X.resize(n, d.X.cols());
  out.y.resize(n);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < fold.size(); ++i) {
    if ((fold[i] == f) == keep_fold) {
      out.X.row(r) = d.X.row(static_cast<Eigen::Index>(i));
      out.y[r] = d.y[static_cast<Eigen::Index>(i)];
      ++r;
    }
  }
  return out;
}

}  // namespace

RhoSelection tune_rho_weighted(const std::vector<RhoTuneArm>& arms,
                               const std::vector<double>& grid, const TuneOptions& opts) {
  if (arms.empty()) throw ValidationError("tune_rho: no arms supplied");
  if (opts.folds < 2) throw ValidationError("tune_rho: folds must be >= 2");
  if (grid.empty()) throw ValidationError("tune_rho: empty rho grid");
  for (double r : grid) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw ValidationError("tune_rho: grid value " + std::to_string(r) + " outside [0, 1]");
    }
  }
  std::vector<double> sorted_grid = grid;
  std::sort(sorted_grid.begin(), sorted_grid.end());

  RhoSelection sel;
  sel.grid = sorted_grid;
  sel.losses.assign(sorted_grid.size(), 0.0);

  for (std::size_t arm = 0; arm < arms.size(); ++arm) {
    const RhoTuneArm& A = arms[arm];
    const Eigen::Index ne = A.De.n();
    if (ne < opts.folds) {
      throw ValidationError("tune_rho: arm " + std::to_string(arm) + " has " +
                            std::to_string(ne) + " trial points, fewer than " +
                            std::to_string(opts.folds) + " folds");
    }
    if (A.weights.size() != ne) {
      throw DataShapeError("tune_rho: arm " + std::to_string(arm) +
                           " weight count does not match trial rows");
    }
    const std::vector<int> fold =
        make_fold_assignment(ne, opts.folds, mix_seed(opts.seed, 7000 + arm));
    sel.fold_assignments.push_back(fold);

    KernelSpec frozen_kernel;
    double frozen_noise = 0.0;
    if (opts.mode == TuneMode::Frozen) {
      const OptimizedHypers h = optimize_icm_hyperparameters(
          A.De, A.Do, 0.5, opts.family, opts.restarts, mix_seed(opts.seed, 8000 + arm));
      frozen_kernel = h.kernel;
      frozen_noise = h.noise_variance;
      sel.frozen_hypers.push_back(h);
    }

    for (int f = 0; f < opts.folds; ++f) {
      const ArmDataset train = take_rows(A.De, fold, f, false);
      const ArmDataset held = take_rows(A.De, fold, f, true);
      if (held.n() < 2) {
        throw ValidationError("tune_rho: arm " + std::to_string(arm) + " fold " +
                              std::to_string(f) + " has fewer than 2 held-out points");
      }
      for (std::size_t gi = 0; gi < sorted_grid.size(); ++gi) {
        const double rho = sorted_grid[gi];
        KernelSpec kernel = frozen_kernel;
        double noise = frozen_noise;
        if (opts.mode == TuneMode::Refit) {
          const OptimizedHypers h = optimize_icm_hyperparameters(
              train, A.Do, rho, opts.family, opts.restarts,
              mix_seed(opts.seed, 1000000 + arm * 10000 + static_cast<std::uint64_t>(f) * 100 + gi));
          kernel = h.kernel;
          noise = h.noise_variance;
        }
        const IcmModel model = icm_fit(train, A.Do, rho, kernel, noise);
        const IcmBatchPosterior post = icm_posterior_batch(model, held.X);
        double loss = 0.0;
        Eigen::Index r = 0;
        for (std::size_t i = 0; i < fold.size(); ++i) {
          if (fold[i] == f) {
            const double err = held.y[r] - post.mean_fe[r];
            loss += A.weights[static_cast<Eigen::Index>(i)] * err * err;
            ++r;
          }
        }
        sel.losses[gi] += loss;
      }
    }
  }

  for (double& l : sel.losses) l /= static_cast<double>(arms.size());

  std::size_t best = 0;
  for (std::size_t gi = 1; gi < sorted_grid.size(); ++gi) {
    if (sel.losses[gi] < sel.losses[best]) best = gi;  // strict: ties keep the smaller rho
  }
  sel.chosen_rho = sorted_grid[best];
  return sel;
}

RhoSelection tune_rho(const ArmDataset& De, const ArmDataset& Do, const std::vector<double>& grid,
                      int folds, std::uint64_t seed, KernelFamily family, TuneMode mode,
                      int restarts) {
  RhoTuneArm arm;
  arm.De = De;
  arm.Do = Do;
  if (Do.n() > 0) {
    const LogisticModel prop = fit_study_propensity(De.X, Do.X);
    arm.weights = propensity_weights(prop, De.X);
  } else {
    arm.weights = Eigen::VectorXd::Ones(De.n());
  }
  TuneOptions opts;
  opts.folds = folds;
  opts.mode = mode;
  opts.family = family;
  opts.restarts = restarts;
  opts.seed = seed;
  return tune_rho_weighted({arm}, grid, opts);
}

std::vector<double> default_rho_grid() {
  std::vector<double> g(11);
  for (int i = 0; i <= 10; ++i) g[static_cast<std::size_t>(i)] = i / 10.0;
  return g;
}

nlohmann::json rho_selection_to_json(const RhoSelection& sel) {
  return {{"grid", sel.grid}, {"losses", sel.losses}, {"chosen_rho", sel.chosen_rho}};
}

}  // namespace cicm
