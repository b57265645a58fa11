#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "cicm/data.hpp"
#include "cicm/rng.hpp"
#include "cicm/simgen.hpp"
#include "cicm/tuning.hpp"
#include "doctest.h"

using namespace cicm;

namespace {

Eigen::MatrixXd uniform_column(int n, double lo, double hi, std::uint64_t seed) {
  Philox g(seed);
  Eigen::MatrixXd X(n, 1);
  for (int i = 0; i < n; ++i) X(i, 0) = g.uniform(lo, hi);
  return X;
}

ArmDataset smooth_arm(int n, std::uint64_t seed) {
  Philox g(seed);
  ArmDataset a;
  a.X = uniform_column(n, -2.0, 2.0, seed);
  a.y.resize(n);
  for (int i = 0; i < n; ++i) a.y[i] = std::sin(2.0 * a.X(i, 0)) + 0.3 * g.normal();
  return a;
}

LogisticModel constant_model(double intercept) {
  LogisticModel m;
  m.intercept = intercept;
  m.coefficients = Eigen::VectorXd::Zero(1);
  return m;
}

}  // namespace

TEST_CASE("propensity prediction is the logistic of the linear score") {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(1, 1);
  CHECK(predict_propensity(constant_model(3.0), X)[0] ==
        doctest::Approx(0.9525741268224334).epsilon(1e-12));
  CHECK(predict_propensity(constant_model(0.0), X)[0] == doctest::Approx(0.5).epsilon(1e-12));
  const double p = predict_propensity(constant_model(-40.0), X)[0];
  CHECK(p > 0.0);
  CHECK(p < 1e-12);
}

TEST_CASE("overlap weights follow the clipped inverse formula") {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(1, 1);
  // p ~ 0 -> weight 1; p = 1/2 -> weight 2; p ~ 1 -> capped at 100.
  CHECK(propensity_weights(constant_model(-40.0), X)[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(propensity_weights(constant_model(0.0), X)[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(propensity_weights(constant_model(40.0), X)[0] == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("identical study covariates fit a near-flat membership model") {
  const Eigen::MatrixXd X = uniform_column(40, -2.0, 2.0, 1101);
  const LogisticModel m = fit_study_propensity(X, X);
  CHECK(std::abs(m.intercept) < 0.2);
  CHECK(std::abs(m.coefficients[0]) < 0.2);
}

TEST_CASE("separated studies stay finite under the ridge") {
  const Eigen::MatrixXd Xe = uniform_column(20, -2.0, -1.0, 1111);
  const Eigen::MatrixXd Xo = uniform_column(20, 1.0, 2.0, 1112);
  const LogisticModel m = fit_study_propensity(Xe, Xo);
  CHECK(std::isfinite(m.intercept));
  CHECK(std::isfinite(m.coefficients[0]));
  // membership label 1 sits at high x, so the slope must be positive
  CHECK(m.coefficients[0] > 0.0);
}

TEST_CASE("trial selection at low covariates yields a positive membership slope") {
  const SimOutput sim = simulate(make_scenario(ScenarioId::Uni1, 2000, 2000), 1121);
  const LogisticModel m = fit_study_propensity(sim.rct.X, sim.obs.X);
  CHECK(m.coefficients[0] > 0.0);
}

TEST_CASE("an empty donor study makes every rho equivalent") {
  const ArmDataset De = smooth_arm(30, 1131);
  ArmDataset Do;
  Do.X.resize(0, 1);
  Do.y.resize(0);
  const std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  const RhoSelection sel = tune_rho(De, Do, grid, 5, 1132, KernelFamily::RBF, TuneMode::Frozen, 2);
  REQUIRE(sel.losses.size() == grid.size());
  for (std::size_t i = 1; i < sel.losses.size(); ++i)
    CHECK(std::abs(sel.losses[i] - sel.losses[0]) < 1e-8);
  // ties break toward the smaller value
  CHECK(sel.chosen_rho == doctest::Approx(0.0));
}

TEST_CASE("cross-validation folds partition the trial rows evenly") {
  const ArmDataset De = smooth_arm(23, 1141);
  const ArmDataset Do = smooth_arm(15, 1142);
  const RhoSelection sel =
      tune_rho(De, Do, {0.0, 0.5, 1.0}, 5, 1143, KernelFamily::RBF, TuneMode::Frozen, 2);
  REQUIRE(sel.fold_assignments.size() == 1);
  const auto& folds = sel.fold_assignments[0];
  REQUIRE(folds.size() == 23);
  std::map<int, int> counts;
  for (int f : folds) {
    CHECK(f >= 0);
    CHECK(f < 5);
    ++counts[f];
  }
  CHECK(counts.size() == 5);
  for (const auto& [f, c] : counts) {
    (void)f;
    CHECK(c >= 4);  // 23 rows over 5 folds: sizes 4 or 5
    CHECK(c <= 5);
  }
}

TEST_CASE("held-out sets depend only on the seed and trial size") {
  const ArmDataset De = smooth_arm(20, 1151);
  ArmDataset Do = smooth_arm(12, 1152);
  const RhoSelection a =
      tune_rho(De, Do, {0.0, 0.5}, 4, 1153, KernelFamily::RBF, TuneMode::Frozen, 2);
  Do.y.array() += 3.0;  // perturbing donor outcomes must not reshuffle folds
  const RhoSelection b =
      tune_rho(De, Do, {0.0, 0.5}, 4, 1153, KernelFamily::RBF, TuneMode::Frozen, 2);
  CHECK(a.fold_assignments == b.fold_assignments);
}

TEST_CASE("selection is deterministic in its inputs") {
  const ArmDataset De = smooth_arm(24, 1161);
  const ArmDataset Do = smooth_arm(30, 1162);
  const RhoSelection a = tune_rho(De, Do, default_rho_grid(), 5, 1163, KernelFamily::RBF,
                                  TuneMode::Frozen, 2);
  const RhoSelection b = tune_rho(De, Do, default_rho_grid(), 5, 1163, KernelFamily::RBF,
                                  TuneMode::Frozen, 2);
  CHECK(a.chosen_rho == b.chosen_rho);
  CHECK(a.losses == b.losses);
}

TEST_CASE("frozen mode records the shared hyperparameters, refit mode does not") {
  const ArmDataset De = smooth_arm(18, 1171);
  const ArmDataset Do = smooth_arm(14, 1172);
  const RhoSelection frozen =
      tune_rho(De, Do, {0.0, 0.5, 1.0}, 3, 1173, KernelFamily::RBF, TuneMode::Frozen, 2);
  REQUIRE(frozen.frozen_hypers.size() == 1);
  CHECK(frozen.frozen_hypers[0].kernel.lengthscales.size() == 1);
  const RhoSelection refit =
      tune_rho(De, Do, {0.0, 0.5, 1.0}, 3, 1173, KernelFamily::RBF, TuneMode::Refit, 1);
  CHECK(refit.frozen_hypers.empty());
}

TEST_CASE("a donor copy of the trial pushes the selection toward full coupling") {
  int high = 0;
  const int seeds = 10;
  for (int s = 0; s < seeds; ++s) {
    const ArmDataset De = smooth_arm(40, 1181 + 10 * static_cast<std::uint64_t>(s));
    const ArmDataset Do = De;  // same covariates, same outcomes
    const RhoSelection sel = tune_rho(De, Do, default_rho_grid(), 5,
                                      1182 + 10 * static_cast<std::uint64_t>(s),
                                      KernelFamily::RBF, TuneMode::Frozen, 2);
    if (sel.chosen_rho >= 0.8) ++high;
  }
  CHECK(high >= 8);
}

TEST_SUITE("slow") {

TEST_CASE("curved-confounding replications select intermediate coupling most often") {
  // Donor outcomes share the trial surface up to a smooth bias, so the
  // selection should concentrate well inside (0, 1) but below full pooling.
  std::map<double, int> counts;
  const int reps = 20;
  for (int rep = 0; rep < reps; ++rep) {
    const SimOutput sim =
        simulate(make_scenario(ScenarioId::Uni2, 1000, 600), mix_seed(1191, rep));
    const auto rct_arms = split_by_arm(sim.rct);
    const auto obs_arms = split_by_arm(sim.obs);
    const RhoSelection sel =
        tune_rho(rct_arms[1], obs_arms[1], default_rho_grid(), 5, mix_seed(1192, rep),
                 KernelFamily::RBF, TuneMode::Frozen, 2);
    counts[sel.chosen_rho] += 1;
  }
  double modal = -1.0;
  int best = -1;
  for (const auto& [rho, c] : counts) {
    if (c > best) {
      best = c;
      modal = rho;
    }
  }
  CHECK(modal >= 0.6 - 1e-12);
  CHECK(modal <= 0.9 + 1e-12);
}

}  // TEST_SUITE("slow")
