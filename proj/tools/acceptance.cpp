// Acceptance harness: one numbered check per release criterion, each printing
// a single [PASS]/[FAIL] line plus supporting detail.  Criteria 4-9 leave an
// optimizer-audit file behind; criterion 10 aggregates those files, so it must
// run after them (the ctest wiring enforces this).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cicm/cate.hpp"
#include "cicm/errors.hpp"
#include "cicm/harness.hpp"
#include "cicm/icm.hpp"
#include "cicm/rng.hpp"
#include "cicm/simgen.hpp"
#include "nlohmann/json.hpp"
#include "oracles.hpp"

using namespace cicm;

namespace {

struct CritResult {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back(std::string(ok ? "  ok:   " : "  BAD:  ") + what);
  }
  void info(const std::string& what) { notes.push_back("  note: " + what); }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------- randomness

KernelSpec random_kernel(Philox& rng, Eigen::Index dim) {
  KernelSpec spec;
  const double pick = rng.uniform();
  spec.family = pick < 1.0 / 3.0   ? KernelFamily::RBF
                : pick < 2.0 / 3.0 ? KernelFamily::Matern32
                                   : KernelFamily::Matern52;
  spec.lengthscales.resize(dim);
  for (Eigen::Index d = 0; d < dim; ++d) spec.lengthscales[d] = rng.uniform(0.4, 2.5);
  spec.variance = rng.uniform(0.3, 3.0);
  return spec;
}

Eigen::MatrixXd random_points(Philox& rng, Eigen::Index n, Eigen::Index dim) {
  Eigen::MatrixXd X(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index d = 0; d < dim; ++d) X(i, d) = rng.uniform(-2.0, 2.0);
  }
  return X;
}

ArmDataset random_arm(Philox& rng, Eigen::Index n, Eigen::Index dim) {
  ArmDataset out;
  out.X = random_points(rng, n, dim);
  out.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.y[i] = rng.normal(0.0, 1.5);
  return out;
}

double log_uniform(Philox& rng, double lo, double hi) {
  return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

// ------------------------------------------------------------ criteria 1-3

CritResult criterion_1() {
  CritResult r;
  const auto t0 = std::chrono::steady_clock::now();
  Philox rng(10101);
  double max_err = 0.0;
  for (int it = 0; it < 200; ++it) {
    const Eigen::Index dim = 1 + static_cast<Eigen::Index>(rng.uniform() * 3.0);
    const Eigen::Index ne = static_cast<Eigen::Index>(rng.uniform() * 11.0);
    const Eigen::Index no = static_cast<Eigen::Index>(rng.uniform() * 21.0);
    const double rho = rng.uniform();
    const double noise = log_uniform(rng, 1e-3, 1.0);
    const KernelSpec spec = random_kernel(rng, dim);
    const ArmDataset De = random_arm(rng, ne, dim);
    const ArmDataset Do = random_arm(rng, no, dim);
    const Eigen::VectorXd xs = random_points(rng, 1, dim).row(0);

    const IcmModel model = icm_fit(De, Do, rho, spec, noise);
    const TaskPosterior fe = icm_posterior(model, xs, Task::FE);
    const TaskPosterior fo = icm_posterior(model, xs, Task::FO);
    const TaskPosterior eta = icm_posterior_eta(model, xs);
    const refcalc::JointPosterior ref = refcalc::dense_condition(spec, rho, De, Do, noise, xs);

    max_err = std::max({max_err, std::abs(fe.mean - ref.mean_e), std::abs(fe.variance - ref.var_e),
                        std::abs(fo.mean - ref.mean_o), std::abs(fo.variance - ref.var_o),
                        std::abs(eta.mean - (ref.mean_e - ref.mean_o)),
                        std::abs(eta.variance - (ref.var_e + ref.var_o - 2.0 * ref.cov_eo))});
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.require(max_err <= 1e-8, "max abs error vs dense conditioning = " + fmt(max_err) + " <= 1e-8");
  r.require(secs < 60.0, "runtime " + fmt(secs) + " s < 60 s");
  return r;
}

CritResult criterion_2() {
  CritResult r;
  const auto t0 = std::chrono::steady_clock::now();
  Philox rng(20202);
  long long violations = 0;
  for (int it = 0; it < 1000; ++it) {
    const Eigen::Index dim = 1 + static_cast<Eigen::Index>(rng.uniform() * 3.0);
    const Eigen::Index ne = 2 + static_cast<Eigen::Index>(rng.uniform() * 39.0);
    const Eigen::Index no = static_cast<Eigen::Index>(rng.uniform() * 81.0);
    const double rho = rng.uniform();
    const double noise = log_uniform(rng, 1e-3, 1.0);
    const KernelSpec spec = random_kernel(rng, dim);
    const ArmDataset De = random_arm(rng, ne, dim);
    const ArmDataset Do = random_arm(rng, no, dim);
    const Eigen::MatrixXd Xs = random_points(rng, 5, dim);
    for (const VarianceBoundRecord& rec : variance_bound_report(De, Do, rho, spec, noise, Xs)) {
      if (!rec.holds_lower || !rec.holds_upper) ++violations;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.require(violations == 0,
            "variance sandwich violations = " + std::to_string(violations) + " (want 0)");
  r.require(secs < 120.0, "runtime " + fmt(secs) + " s < 120 s");
  return r;
}

CritResult criterion_3() {
  CritResult r;
  Philox rng(30303);

  double worst_zero = 0.0;
  for (int it = 0; it < 50; ++it) {
    const Eigen::Index dim = 1 + static_cast<Eigen::Index>(rng.uniform() * 3.0);
    const double noise = log_uniform(rng, 1e-3, 1.0);
    const KernelSpec spec = random_kernel(rng, dim);
    const ArmDataset De = random_arm(rng, 2 + static_cast<Eigen::Index>(rng.uniform() * 14.0), dim);
    const ArmDataset Do = random_arm(rng, 2 + static_cast<Eigen::Index>(rng.uniform() * 29.0), dim);
    const Eigen::MatrixXd Xs = random_points(rng, 5, dim);

    const IcmModel model = icm_fit(De, Do, 0.0, spec, noise);
    const GpModel ref = gp_fit(De.X, De.y, spec, noise);
    const IcmBatchPosterior post = icm_posterior_batch(model, Xs);
    const GpPrediction gp = gp_posterior(ref, Xs);
    worst_zero = std::max({worst_zero, (post.mean_fe - gp.mean).cwiseAbs().maxCoeff(),
                           (post.var_fe - gp.variance).cwiseAbs().maxCoeff()});
  }
  r.require(worst_zero <= 1e-10,
            "rho=0 reduction to trial-only GP, max abs error " + fmt(worst_zero) + " <= 1e-10");

  double worst_one = 0.0;
  for (int it = 0; it < 50; ++it) {
    const Eigen::Index dim = 1 + static_cast<Eigen::Index>(rng.uniform() * 3.0);
    const double noise = log_uniform(rng, 1e-3, 1.0);
    const KernelSpec spec = random_kernel(rng, dim);
    const ArmDataset De = random_arm(rng, 2 + static_cast<Eigen::Index>(rng.uniform() * 14.0), dim);
    const ArmDataset Do = random_arm(rng, 2 + static_cast<Eigen::Index>(rng.uniform() * 29.0), dim);
    const Eigen::MatrixXd Xs = random_points(rng, 5, dim);

    const IcmModel model = icm_fit(De, Do, 1.0, spec, noise);
    Eigen::MatrixXd Xp(De.n() + Do.n(), dim);
    Xp << De.X, Do.X;
    Eigen::VectorXd yp(De.n() + Do.n());
    yp << De.y, Do.y;
    const GpModel ref = gp_fit(Xp, yp, spec, noise);
    const IcmBatchPosterior post = icm_posterior_batch(model, Xs);
    const GpPrediction gp = gp_posterior(ref, Xs);
    worst_one = std::max({worst_one, (post.mean_fe - gp.mean).cwiseAbs().maxCoeff(),
                          (post.var_fe - gp.variance).cwiseAbs().maxCoeff()});
  }
  r.require(worst_one <= 1e-6,
            "rho=1 reduction to pooled GP, max abs error " + fmt(worst_one) + " <= 1e-6");

  double worst_eta = 0.0;
  for (int it = 0; it < 50; ++it) {
    const Eigen::Index dim = 1 + static_cast<Eigen::Index>(rng.uniform() * 3.0);
    const KernelSpec spec = random_kernel(rng, dim);
    ArmDataset empty;
    empty.X.resize(0, dim);
    empty.y.resize(0);
    const IcmModel model = icm_fit(empty, empty, 1.0, spec, log_uniform(rng, 1e-3, 1.0));
    const Eigen::VectorXd xs = random_points(rng, 1, dim).row(0);
    worst_eta = std::max(worst_eta, std::abs(icm_posterior_eta(model, xs).variance));
  }
  const CoregMatrix cm = coregionalization_matrix(1.0);
  r.require(cm.b_e + cm.b_o - 2.0 * cm.b_eo == 0.0,
            "coupling identity b_e + b_o - 2 b_eo = 0 at rho=1 (exact)");
  r.require(worst_eta <= 1e-12,
            "prior effect-difference variance at rho=1, max " + fmt(worst_eta) + " <= 1e-12");
  return r;
}

// ------------------------------------------------------------ criteria 4-9

void write_audit(const std::string& audit_dir, int criterion, const OptimizerAuditStats& a) {
  std::filesystem::create_directories(audit_dir);
  nlohmann::json j = {{"criterion", criterion},
                      {"fits", a.fits},
                      {"violations", a.violations},
                      {"worst_gap", a.worst_gap}};
  const std::string path = audit_dir + "/criterion_" + std::to_string(criterion) + ".json";
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write audit file: " + path);
  out << j.dump(2) << "\n";
}

BenchmarkConfig base_config(ScenarioId id, int reps, std::uint64_t seed) {
  BenchmarkConfig cfg;
  cfg.scenario = make_scenario(id);
  cfg.replications = reps;
  cfg.grid_size = 50;
  cfg.seed = seed;
  cfg.kernel = KernelFamily::RBF;
  cfg.tune_mode = TuneMode::Frozen;
  cfg.jobs = 1;
  return cfg;
}

const MethodAggregate& agg_of(const BenchmarkResult& res, std::size_t variant, MethodId m) {
  return res.variants.at(variant).aggregates.at(m);
}

int total_failures(const BenchmarkResult& res) {
  int f = 0;
  for (const auto& v : res.variants) {
    for (const auto& [m, a] : v.aggregates) f += a.failures;
  }
  return f;
}

CritResult criterion_4(const std::string& audit_dir) {
  CritResult r;
  const auto t0 = std::chrono::steady_clock::now();
  BenchmarkConfig cfg = base_config(ScenarioId::Uni2, 20, 4001);
  cfg.methods = {MethodId::CausalIcm};
  cfg.sweeps.rho_grid = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  const BenchmarkResult res = run_benchmark(cfg);
  write_audit(audit_dir, 4, res.audit);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::vector<double> m;
  for (std::size_t v = 0; v < res.variants.size(); ++v) {
    m.push_back(agg_of(res, v, MethodId::CausalIcm).mean_rmse);
    r.info("mean rmse at " + res.variants[v].label + " = " + fmt(m.back()));
  }
  r.require(total_failures(res) == 0, "all fits succeeded");
  for (int i = 0; i + 1 < 5; ++i) {
    r.require(m[static_cast<std::size_t>(i)] > m[static_cast<std::size_t>(i) + 1],
              "mean rmse strictly decreasing: " + res.variants[static_cast<std::size_t>(i)].label +
                  " > " + res.variants[static_cast<std::size_t>(i) + 1].label);
  }
  r.require(m[5] > m[4], "mean rmse rises again from rho=0.8 to rho=1");
  r.require(m[4] < 0.7, "mean rmse at rho=0.8 = " + fmt(m[4]) + " < 0.7");
  r.require(secs < 1800.0, "runtime " + fmt(secs / 60.0) + " min < 30 min");
  return r;
}

CritResult criterion_5(const std::string& audit_dir) {
  CritResult r;
  const auto t0 = std::chrono::steady_clock::now();
  OptimizerAuditStats audit;

  std::map<ScenarioId, std::map<MethodId, double>> means;
  for (const auto& [id, seed] : std::vector<std::pair<ScenarioId, std::uint64_t>>{
           {ScenarioId::Uni1, 5001}, {ScenarioId::Uni2, 5002}}) {
    BenchmarkConfig cfg = base_config(id, 20, seed);
    const BenchmarkResult res = run_benchmark(cfg);
    audit.fits += res.audit.fits;
    audit.violations += res.audit.violations;
    audit.worst_gap = std::min(audit.worst_gap, res.audit.worst_gap);
    r.require(total_failures(res) == 0,
              scenario_name(id) + ": all fits succeeded");
    for (const MethodId m : cfg.methods) {
      means[id][m] = agg_of(res, 0, m).mean_rmse;
      r.info(scenario_name(id) + " " + method_name(m) + " mean rmse = " + fmt(means[id][m]) +
             (m == MethodId::CausalIcm
                  ? " (mean chosen rho " + fmt(agg_of(res, 0, m).mean_chosen_rho) + ")"
                  : ""));
    }
  }
  write_audit(audit_dir, 5, audit);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto& u1 = means[ScenarioId::Uni1];
  const auto& u2 = means[ScenarioId::Uni2];
  r.require(u1.at(MethodId::CausalIcm) <= u1.at(MethodId::GpExp),
            "uni1: joint model <= trial-only learner");
  r.require(u1.at(MethodId::CausalIcm) <= u1.at(MethodId::GpObs),
            "uni1: joint model <= observational-only learner");
  r.require(u2.at(MethodId::CausalIcm) <= u2.at(MethodId::GpExp),
            "uni2: joint model <= trial-only learner");
  r.require(u2.at(MethodId::CausalIcm) <= u2.at(MethodId::GpObs),
            "uni2: joint model <= observational-only learner");
  r.require(u2.at(MethodId::CausalIcm) <= u2.at(MethodId::ExpGround),
            "uni2: joint model <= linear-correction comparator");
  r.require(secs < 2700.0, "runtime " + fmt(secs / 60.0) + " min < 45 min");
  return r;
}

CritResult criterion_6(const std::string& audit_dir) {
  CritResult r;
  const auto t0 = std::chrono::steady_clock::now();
  BenchmarkConfig cfg = base_config(ScenarioId::Uni1, 50, 6001);
  cfg.methods = {MethodId::CausalIcm, MethodId::GpObs};
  const BenchmarkResult res = run_benchmark(cfg);
  write_audit(audit_dir, 6, res.audit);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  r.require(total_failures(res) == 0, "all fits succeeded");
  const MethodAggregate& icm = agg_of(res, 0, MethodId::CausalIcm);
  const MethodAggregate& obs = agg_of(res, 0, MethodId::GpObs);

  // Half of the grid with the largest confounding magnitude.
  const SimOutput probe = simulate(cfg.scenario, mix_seed(cfg.seed, 0));
  const Eigen::MatrixXd& grid = res.variants[0].grid;
  std::vector<std::pair<double, Eigen::Index>> by_eta;
  for (Eigen::Index j = 0; j < grid.rows(); ++j) {
    by_eta.emplace_back(std::abs(probe.truth.eta(grid.row(j))), j);
  }
  std::sort(by_eta.begin(), by_eta.end(), [](auto& a, auto& b) { return a.first > b.first; });
  double obs_cov_high_eta = 0.0;
  const std::size_t half = by_eta.size() / 2;
  for (std::size_t k = 0; k < half; ++k) {
    obs_cov_high_eta += obs.coverage[by_eta[k].second];
  }
  obs_cov_high_eta /= static_cast<double>(half);

  r.info("joint-model mean coverage = " + fmt(icm.mean_coverage));
  r.info("observational-only coverage on the most-confounded half = " + fmt(obs_cov_high_eta));
  r.require(icm.mean_coverage >= 0.90, "joint-model mean 95% coverage >= 0.90");
  r.require(obs_cov_high_eta <= 0.50,
            "observational-only coverage <= 0.50 where confounding is largest");
  r.require(secs < 3600.0, "runtime " + fmt(secs / 60.0) + " min < 60 min");
  return r;
}

CritResult criterion_7(const std::string& audit_dir) {
  CritResult r;
  const auto t0 = std::chrono::steady_clock::now();
  BenchmarkConfig cfg = base_config(ScenarioId::Uni2, 20, 7001);
  cfg.methods = {MethodId::CausalIcm, MethodId::ExpGround};
  const BenchmarkResult res = run_benchmark(cfg);
  write_audit(audit_dir, 7, res.audit);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  r.require(total_failures(res) == 0, "all fits succeeded");
  const MethodAggregate& icm = agg_of(res, 0, MethodId::CausalIcm);
  const MethodAggregate& eg = agg_of(res, 0, MethodId::ExpGround);
  r.require(icm.mean_in_mse && icm.mean_out_mse && eg.mean_out_mse,
            "support split produced points on both sides");
  if (icm.mean_in_mse && icm.mean_out_mse && eg.mean_out_mse) {
    r.info("joint model: in " + fmt(*icm.mean_in_mse) + ", out " + fmt(*icm.mean_out_mse) +
           "; comparator out " + fmt(*eg.mean_out_mse));
    r.require(*icm.mean_out_mse < *eg.mean_out_mse,
              "joint model extrapolates better than the linear-correction comparator");
    r.require(*icm.mean_in_mse < 0.6, "joint-model in-support mse < 0.6");
  }
  r.info("runtime " + fmt(secs / 60.0) + " min");
  return r;
}

CritResult criterion_8(const std::string& audit_dir) {
  CritResult r;
  const auto t0 = std::chrono::steady_clock::now();
  BenchmarkConfig cfg = base_config(ScenarioId::Uni2, 20, 8001);
  cfg.methods = {MethodId::CausalIcm};
  cfg.sweeps.kernel_families = {KernelFamily::RBF, KernelFamily::Matern52,
                                KernelFamily::Matern32};
  const BenchmarkResult res = run_benchmark(cfg);
  write_audit(audit_dir, 8, res.audit);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  r.require(total_failures(res) == 0, "all fits succeeded");
  const MethodAggregate& rbf = agg_of(res, 0, MethodId::CausalIcm);
  const MethodAggregate& m52 = agg_of(res, 1, MethodId::CausalIcm);
  const MethodAggregate& m32 = agg_of(res, 2, MethodId::CausalIcm);
  r.info("mean rmse rbf " + fmt(rbf.mean_rmse) + ", matern52 " + fmt(m52.mean_rmse) +
         ", matern32 " + fmt(m32.mean_rmse));
  r.require(rbf.mean_rmse <= m52.mean_rmse, "rbf <= matern52");
  r.require(rbf.mean_rmse <= m32.mean_rmse, "rbf <= matern32");
  const double pooled_sd =
      std::sqrt(0.5 * (m52.sd_rmse * m52.sd_rmse + m32.sd_rmse * m32.sd_rmse));
  r.require(m52.mean_rmse - m32.mean_rmse <= pooled_sd,
            "matern52 <= matern32 within one pooled sd (" + fmt(pooled_sd) + ")");
  r.info("runtime " + fmt(secs / 60.0) + " min");
  return r;
}

CritResult criterion_9(const std::string& audit_dir) {
  CritResult r;
  const auto t0 = std::chrono::steady_clock::now();
  BenchmarkConfig cfg = base_config(ScenarioId::Uni2, 10, 9001);
  cfg.methods = {MethodId::CausalIcm};
  cfg.sweeps.n_obs_list = {200, 1000, 2000};
  const BenchmarkResult res = run_benchmark(cfg);
  write_audit(audit_dir, 9, res.audit);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  r.require(total_failures(res) == 0, "all fits succeeded");
  const double m200 = agg_of(res, 0, MethodId::CausalIcm).mean_rmse;
  const double m1000 = agg_of(res, 1, MethodId::CausalIcm).mean_rmse;
  const double m2000 = agg_of(res, 2, MethodId::CausalIcm).mean_rmse;
  r.info("mean rmse: n_obs=200 " + fmt(m200) + ", 1000 " + fmt(m1000) + ", 2000 " + fmt(m2000));
  r.require(m2000 <= 1.25 * m200, "rmse does not degrade with more observational data");
  r.info("runtime " + fmt(secs / 60.0) + " min");
  return r;
}

CritResult criterion_10(const std::string& audit_dir) {
  CritResult r;
  long long fits = 0, violations = 0;
  double worst = 0.0;
  for (int c = 4; c <= 9; ++c) {
    const std::string path = audit_dir + "/criterion_" + std::to_string(c) + ".json";
    std::ifstream in(path);
    if (!in) {
      r.require(false, "missing audit file " + path + " (run criteria 4-9 first)");
      continue;
    }
    nlohmann::json j;
    in >> j;
    fits += j.at("fits").get<long long>();
    violations += j.at("violations").get<long long>();
    worst = std::min(worst, j.at("worst_gap").get<double>());
    r.info("criterion " + std::to_string(c) + ": " + std::to_string(j.at("fits").get<long long>()) +
           " searches, " + std::to_string(j.at("violations").get<long long>()) + " violations");
  }
  r.require(fits > 0, "hyperparameter searches were recorded (" + std::to_string(fits) + ")");
  r.require(violations == 0, "final objective >= initial objective on every search");
  r.info("worst final-minus-initial gap " + fmt(worst));
  return r;
}

// ------------------------------------------------------------- criterion 11

// Arm contrast by global series regression: fit the whole sample to
//   y ~ phi(x) + a * phi(x),   phi = additive degree-6 polynomial in the
// first one or two coordinates, linear in the rest.  The contrast estimate
// at a point is the fitted a-block evaluated there.  Using the full sample
// instead of windows keeps the per-point error at the few-percent level,
// which a windowed fit cannot reach on a 10^5 draw.
class SeriesContrast {
 public:
  explicit SeriesContrast(const Dataset& data) : d_(data.X.cols()) {
    const Eigen::Index n = data.X.rows();
    const Eigen::Index p = basis_size();
    Eigen::MatrixXd Z(n, 2 * p);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd phi = basis(data.X.row(i).transpose());
      Z.row(i).head(p) = phi;
      Z.row(i).tail(p) = data.a[i] * phi;
    }
    coef_ = Z.colPivHouseholderQr().solve(data.y);
  }

  double operator()(const Eigen::VectorXd& center) const {
    return basis(center).dot(coef_.tail(basis_size()));
  }

 private:
  Eigen::Index basis_size() const {
    const Eigen::Index active = std::min<Eigen::Index>(d_, 2);
    return 1 + 6 * active + (d_ - active);
  }

  Eigen::VectorXd basis(const Eigen::VectorXd& x) const {
    const Eigen::Index active = std::min<Eigen::Index>(d_, 2);
    Eigen::VectorXd phi(basis_size());
    Eigen::Index at = 0;
    phi[at++] = 1.0;
    for (Eigen::Index k = 0; k < active; ++k) {
      double pw = 1.0;
      for (int deg = 1; deg <= 6; ++deg) {
        pw *= x[k] * 0.5;  // scale to [-1,1] so the gram stays well conditioned
        phi[at++] = pw;
      }
    }
    for (Eigen::Index k = active; k < d_; ++k) phi[at++] = x[k];
    return phi;
  }

  Eigen::Index d_;
  Eigen::VectorXd coef_;
};

CritResult criterion_11() {
  CritResult r;
  const std::vector<ScenarioId> ids = {ScenarioId::Uni1, ScenarioId::Uni2, ScenarioId::Multi1,
                                       ScenarioId::Multi2};

  // errors under the two sign conventions for the confounding term
  double obs_err_minus = 0.0, obs_err_plus = 0.0;
  for (std::size_t si = 0; si < ids.size(); ++si) {
    // Pool sized so the selected trial itself lands near 10^5 rows, the same
    // scale as the observational sample.
    const SimScenario scenario = make_scenario(ids[si], 400000, 100000);
    const SimOutput sim = simulate(scenario, mix_seed(110011, si));
    const Eigen::Index d = scenario.dim;
    const bool uni = d == 1;
    const Eigen::Index active = std::min<Eigen::Index>(d, 2);
    const SeriesContrast trial_fit(sim.rct);
    const SeriesContrast obs_fit(sim.obs);

    // trial side: centers at realized quantiles of the selected sample,
    // clamped to the central 80% of each coordinate's marginal so the series
    // basis is never evaluated at a design edge, where its variance peaks
    const Eigen::Index ne = sim.rct.X.rows();
    Eigen::VectorXd coord_lo(active), coord_hi(active);
    for (Eigen::Index k = 0; k < active; ++k) {
      std::vector<double> col(sim.rct.X.col(k).data(), sim.rct.X.col(k).data() + ne);
      const std::size_t lo_at = static_cast<std::size_t>(0.1 * ne);
      const std::size_t hi_at = static_cast<std::size_t>(0.9 * ne);
      std::nth_element(col.begin(), col.begin() + lo_at, col.end());
      coord_lo[k] = col[lo_at];
      std::nth_element(col.begin(), col.begin() + hi_at, col.end());
      coord_hi[k] = col[hi_at];
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(ne));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      const double ka = uni ? sim.rct.X(a, 0) : sim.rct.X(a, 0) + sim.rct.X(a, 1);
      const double kb = uni ? sim.rct.X(b, 0) : sim.rct.X(b, 0) + sim.rct.X(b, 1);
      return ka < kb;
    });
    double trial_err = 0.0;
    for (int q = 0; q < 9; ++q) {
      const Eigen::Index pick = order[static_cast<std::size_t>(((2 * q + 1) * ne) / 18)];
      Eigen::VectorXd center = Eigen::VectorXd::Zero(d);
      for (Eigen::Index k = 0; k < active; ++k) {
        center[k] = std::clamp(sim.rct.X(pick, k), coord_lo[k], coord_hi[k]);
      }
      trial_err = std::max(trial_err, std::abs(trial_fit(center) - sim.truth.tau(center)));
    }
    r.require(trial_err <= 0.1, scenario_name(ids[si]) + ": trial contrast vs effect surface, max "
                                    "err " + fmt(trial_err) + " <= 0.1");

    // observational side: fixed interior grid
    std::vector<Eigen::VectorXd> centers;
    if (uni) {
      for (int q = 0; q < 9; ++q) {
        Eigen::VectorXd c(1);
        c[0] = -1.6 + 3.2 * q / 8.0;
        centers.push_back(c);
      }
    } else {
      for (double a : {-1.2, 0.0, 1.2}) {
        for (double b : {-1.2, 0.0, 1.2}) {
          Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
          c[0] = a;
          c[1] = b;
          centers.push_back(c);
        }
      }
    }
    for (const Eigen::VectorXd& center : centers) {
      const double c = obs_fit(center);
      const double tau = sim.truth.tau(center);
      const double eta = sim.truth.eta(center);
      obs_err_minus = std::max(obs_err_minus, std::abs(c - (tau - eta)));
      obs_err_plus = std::max(obs_err_plus, std::abs(c - (tau + eta)));
    }
  }

  const bool plus_sign = obs_err_plus < obs_err_minus;
  const double obs_err = plus_sign ? obs_err_plus : obs_err_minus;
  r.info(std::string("resolved convention: observational contrast = effect ") +
         (plus_sign ? "+" : "-") + " confounding term (so the bias enters with a " +
         (plus_sign ? "negative" : "positive") + " sign)");
  r.require(obs_err <= 0.1,
            "observational contrast vs resolved surface, max err " + fmt(obs_err) + " <= 0.1");

  int in_range = 0;
  for (int s = 0; s < 200; ++s) {
    const SimOutput sim = simulate(make_scenario(ScenarioId::Uni1, 1000, 10), 1000 + s);
    const Eigen::Index n = sim.rct.X.rows();
    if (n >= 200 && n <= 300) ++in_range;
  }
  r.info("uni1 trial sizes in [200,300]: " + std::to_string(in_range) + "/200");
  r.require(in_range >= 180, "trial size lands in [200,300] for >= 90% of seeds");
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Release acceptance checks"};
  int criterion = 0;
  std::string audit_dir = "acceptance_audit";
  app.add_option("--criterion", criterion, "criterion number 1-11 (default: all)")
      ->check(CLI::Range(0, 11));
  app.add_option("--audit-dir", audit_dir, "directory for optimizer-audit files");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<int, std::string>> names = {
      {1, "posterior matches dense joint-Gaussian conditioning"},
      {2, "variance sandwich between scaled and plain trial-only variance"},
      {3, "limit reductions at rho=0 and rho=1"},
      {4, "rho sensitivity trend on uni2"},
      {5, "method comparison on uni1 and uni2"},
      {6, "coverage: joint model calibrated, observational-only not"},
      {7, "in/out-of-support error split on uni2"},
      {8, "kernel family sweep on uni2"},
      {9, "robustness to observational sample size"},
      {10, "optimizer never returns a worse objective than its start"},
      {11, "generator checks: contrasts, confounding sign, trial size"},
  };

  bool all_pass = true;
  for (const auto& [id, name] : names) {
    if (criterion != 0 && criterion != id) continue;
    CritResult res;
    try {
      switch (id) {
        case 1: res = criterion_1(); break;
        case 2: res = criterion_2(); break;
        case 3: res = criterion_3(); break;
        case 4: res = criterion_4(audit_dir); break;
        case 5: res = criterion_5(audit_dir); break;
        case 6: res = criterion_6(audit_dir); break;
        case 7: res = criterion_7(audit_dir); break;
        case 8: res = criterion_8(audit_dir); break;
        case 9: res = criterion_9(audit_dir); break;
        case 10: res = criterion_10(audit_dir); break;
        case 11: res = criterion_11(); break;
      }
    } catch (const std::exception& e) {
      res.pass = false;
      res.notes.push_back(std::string("  BAD:  unexpected error: ") + e.what());
    }
    std::cout << (res.pass ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << name << "\n";
    for (const std::string& n : res.notes) std::cout << n << "\n";
    std::cout.flush();
    if (!res.pass) all_pass = false;
  }
  return all_pass ? 0 : 1;
}
