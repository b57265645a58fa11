#include "cicm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>
#include <tuple>

#include "cicm/errors.hpp"
#include "cicm/rng.hpp"

namespace cicm {

std::string method_name(MethodId id) {
  switch (id) {
    case MethodId::CausalIcm:
      return "causal_icm";
    case MethodId::GpExp:
      return "gp_exp";
    case MethodId::GpObs:
      return "gp_obs";
    case MethodId::ExpGround:
      return "exp_ground";
  }
  return "causal_icm";
}

MethodId parse_method(const std::string& name) {
  if (name == "causal_icm") return MethodId::CausalIcm;
  if (name == "gp_exp") return MethodId::GpExp;
  if (name == "gp_obs") return MethodId::GpObs;
  if (name == "exp_ground") return MethodId::ExpGround;
  throw ValidationError("unknown method '" + name +
                        "' (expected causal_icm, gp_exp, gp_obs, or exp_ground)");
}

double rmse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth) {
  if (predicted.size() != truth.size() || predicted.size() == 0) {
    throw DataShapeError("rmse: vectors must be non-empty and equal length");
  }
  return std::sqrt((predicted - truth).squaredNorm() / static_cast<double>(predicted.size()));
}

Eigen::VectorXd coverage_curve(
    const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& intervals,
    const Eigen::VectorXd& truth) {
  if (intervals.empty()) throw DataShapeError("coverage_curve: no replications");
  Eigen::VectorXd rate = Eigen::VectorXd::Zero(truth.size());
  for (const auto& [lo, hi] : intervals) {
    if (lo.size() != truth.size() || hi.size() != truth.size()) {
      throw DataShapeError("coverage_curve: interval length mismatch");
    }
    for (Eigen::Index j = 0; j < truth.size(); ++j) {
      rate[j] += (lo[j] <= truth[j] && truth[j] <= hi[j]) ? 1.0 : 0.0;
    }
  }
  return rate / static_cast<double>(intervals.size());
}

bool SupportBox::contains(const Eigen::VectorXd& x) const {
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    if (x[d] < lo[d] || x[d] > hi[d]) return false;
  }
  return true;
}

SupportBox rct_support_box(const Eigen::MatrixXd& rct_X) {
  if (rct_X.rows() == 0) throw DataShapeError("rct_support_box: empty trial covariates");
  SupportBox box;
  box.lo = rct_X.colwise().minCoeff();
  box.hi = rct_X.colwise().maxCoeff();
  if (rct_X.cols() == 1) box.lo[0] = -2.0;  // univariate rule: inside = [-2, max]
  return box;
}

std::pair<std::optional<double>, std::optional<double>> split_support_mse(
    const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth, const Eigen::MatrixXd& grid,
    const SupportBox& support) {
  if (predicted.size() != truth.size() || predicted.size() != grid.rows()) {
    throw DataShapeError("split_support_mse: length mismatch");
  }
  double in_sum = 0.0, out_sum = 0.0;
  Eigen::Index in_n = 0, out_n = 0;
  for (Eigen::Index j = 0; j < grid.rows(); ++j) {
    const double sq = (predicted[j] - truth[j]) * (predicted[j] - truth[j]);
    if (support.contains(grid.row(j))) {
      in_sum += sq;
      ++in_n;
    } else {
      out_sum += sq;
      ++out_n;
    }
  }
  std::pair<std::optional<double>, std::optional<double>> out;
  if (in_n > 0) out.first = in_sum / static_cast<double>(in_n);
  if (out_n > 0) out.second = out_sum / static_cast<double>(out_n);
  return out;
}

namespace {

struct Variant {
  std::string label;
  SimScenario scenario;
  std::optional<double> rho;
  KernelFamily kernel = KernelFamily::RBF;
};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::vector<Variant> expand_variants(const BenchmarkConfig& config) {
  std::vector<Variant> out;
  const Variant base{"", config.scenario, config.rho, config.kernel};
  if (config.sweeps.empty()) {
    out.push_back(base);
    return out;
  }
  for (double r : config.sweeps.rho_grid) {
    Variant v = base;
    v.label = "rho=" + format_double(r);
    v.rho = r;
    out.push_back(v);
  }
  for (KernelFamily f : config.sweeps.kernel_families) {
    Variant v = base;
    v.label = "kernel=" + kernel_family_name(f);
    v.kernel = f;
    out.push_back(v);
  }
  for (int n : config.sweeps.n_obs_list) {
    Variant v = base;
    v.label = "n_obs=" + std::to_string(n);
    v.scenario.n_obs = n;
    out.push_back(v);
  }
  for (double s : config.sweeps.overlap_levels) {
    Variant v = base;
    v.label = "overlap=" + format_double(s);
    v.scenario.selection_scale = s;
    out.push_back(v);
  }
  return out;
}

void validate_config(const BenchmarkConfig& config) {
  if (config.replications < 1) throw ValidationError("benchmark: replications must be >= 1");
  if (config.grid_size < 2) throw ValidationError("benchmark: grid_size must be >= 2");
  if (config.methods.empty()) throw ValidationError("benchmark: no methods selected");
  if (!(config.level > 0.0 && config.level < 1.0)) {
    throw ValidationError("benchmark: level must lie strictly in (0, 1)");
  }
  if (config.rho) coregionalization_matrix(*config.rho);
  int axes = 0;
  axes += !config.sweeps.rho_grid.empty();
  axes += !config.sweeps.kernel_families.empty();
  axes += !config.sweeps.n_obs_list.empty();
  axes += !config.sweeps.overlap_levels.empty();
  if (axes > 1) throw ValidationError("benchmark: at most one sweep axis may be set");
  for (double r : config.sweeps.rho_grid) coregionalization_matrix(r);
  for (int n : config.sweeps.n_obs_list) {
    if (n < 1) throw ValidationError("benchmark: n_obs sweep values must be >= 1");
  }
}

struct ScenarioKey {
  int pool_size, n_obs;
  double selection_scale;
  bool operator<(const ScenarioKey& o) const {
    return std::tie(pool_size, n_obs, selection_scale) <
           std::tie(o.pool_size, o.n_obs, o.selection_scale);
  }
};

FitOptions method_options(const BenchmarkConfig& config, std::uint64_t rep_seed, int method_idx) {
  FitOptions opts;
  opts.restarts = config.restarts;
  opts.folds = config.folds;
  opts.tune_mode = config.tune_mode;
  opts.seed = mix_seed(rep_seed, 300 + static_cast<std::uint64_t>(method_idx));
  return opts;
}

RepRecord run_one_method(MethodId method, const Variant& v, const SimOutput& sim,
                         const Eigen::MatrixXd& grid, const Eigen::VectorXd& true_tau,
                         const BenchmarkConfig& config, int rep, std::uint64_t rep_seed,
                         int method_idx, const std::optional<ArmHypers>& shared_hypers) {
  RepRecord rec;
  rec.rep = rep;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    FitOptions opts = method_options(config, rep_seed, method_idx);
    std::vector<CatePosterior> preds;
    switch (method) {
      case MethodId::CausalIcm: {
        if (shared_hypers) opts.fixed_arm_hypers = shared_hypers;
        const CausalIcmModel model =
            fit_causal_icm_cate(sim.rct, sim.obs, v.rho, v.kernel, opts);
        preds = model.predict(grid, config.level);
        rec.chosen_rho = model.rho;
        break;
      }
      case MethodId::GpExp: {
        const GpTlearner model = fit_tlearner_gp(sim.rct, v.kernel, opts);
        preds = model.predict(grid, config.level);
        rec.chosen_rho = std::nan("");
        break;
      }
      case MethodId::GpObs: {
        const GpTlearner model = fit_tlearner_gp(sim.obs, v.kernel, opts);
        preds = model.predict(grid, config.level);
        rec.chosen_rho = std::nan("");
        break;
      }
      case MethodId::ExpGround: {
        const ExperimentalGrounding model =
            fit_experimental_grounding(sim.rct, sim.obs, v.kernel, 0.5, opts);
        preds = model.predict(grid, config.level);
        rec.chosen_rho = std::nan("");
        break;
      }
    }
    const auto t1 = std::chrono::steady_clock::now();
    rec.seconds = std::chrono::duration<double>(t1 - t0).count();
    const Eigen::Index m = grid.rows();
    rec.tau_mean.resize(m);
    rec.ci_low.resize(m);
    rec.ci_high.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      rec.tau_mean[j] = preds[static_cast<std::size_t>(j)].mean;
      rec.ci_low[j] = preds[static_cast<std::size_t>(j)].ci_low;
      rec.ci_high[j] = preds[static_cast<std::size_t>(j)].ci_high;
    }
    rec.rmse_value = rmse(rec.tau_mean, true_tau);
    const SupportBox box = rct_support_box(sim.rct.X);
    std::tie(rec.in_mse, rec.out_mse) = split_support_mse(rec.tau_mean, true_tau, grid, box);
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  return rec;
}

void aggregate_variant(VariantResult& vr, int replications) {
  for (auto& [method, records] : vr.records) {
    MethodAggregate agg;
    std::vector<double> rmses, seconds, rhos;
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> intervals;
    double in_sum = 0.0, out_sum = 0.0;
    int in_n = 0, out_n = 0;
    for (const RepRecord& r : records) {
      if (!r.ok) {
        ++agg.failures;
        continue;
      }
      ++agg.successes;
      rmses.push_back(r.rmse_value);
      seconds.push_back(r.seconds);
      if (!std::isnan(r.chosen_rho)) rhos.push_back(r.chosen_rho);
      intervals.emplace_back(r.ci_low, r.ci_high);
      if (r.in_mse) {
        in_sum += *r.in_mse;
        ++in_n;
      }
      if (r.out_mse) {
        out_sum += *r.out_mse;
        ++out_n;
      }
    }
    if (agg.successes + agg.failures != replications) {
      throw NumericalError("benchmark: replication accounting mismatch");
    }
    if (!rmses.empty()) {
      double mean = 0.0;
      for (double v : rmses) mean += v;
      mean /= static_cast<double>(rmses.size());
      agg.mean_rmse = mean;
      if (rmses.size() > 1) {
        double ss = 0.0;
        for (double v : rmses) ss += (v - mean) * (v - mean);
        agg.sd_rmse = std::sqrt(ss / static_cast<double>(rmses.size() - 1));
      }
      double sec = 0.0;
      for (double v : seconds) sec += v;
      agg.mean_seconds = sec / static_cast<double>(seconds.size());
      agg.coverage = coverage_curve(intervals, vr.true_tau);
      agg.mean_coverage = agg.coverage.mean();
    }
    if (!rhos.empty()) {
      double m = 0.0;
      for (double v : rhos) m += v;
      agg.mean_chosen_rho = m / static_cast<double>(rhos.size());
    } else {
      agg.mean_chosen_rho = std::nan("");
    }
    if (in_n > 0) agg.mean_in_mse = in_sum / in_n;
    if (out_n > 0) agg.mean_out_mse = out_sum / out_n;
    vr.aggregates[method] = agg;
  }
}

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkConfig& config) {
  validate_config(config);
  const std::vector<Variant> variants = expand_variants(config);
  const bool rho_sweep_sharing =
      !config.sweeps.rho_grid.empty() && config.tune_mode == TuneMode::Frozen &&
      std::count(config.methods.begin(), config.methods.end(), MethodId::CausalIcm) > 0;

  BenchmarkResult result;
  result.config = config;
  const OptimizerAuditStats audit_before = OptimizerAudit::snapshot();

  result.variants.resize(variants.size());
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    VariantResult& vr = result.variants[vi];
    vr.label = variants[vi].label;
    vr.scenario = variants[vi].scenario;
    vr.rho = variants[vi].rho;
    vr.kernel = variants[vi].kernel;
    vr.grid = eval_grid(variants[vi].scenario, config.grid_size);
    vr.true_tau.resize(vr.grid.rows());
    for (const MethodId m : config.methods) {
      vr.records[m] = std::vector<RepRecord>(static_cast<std::size_t>(config.replications));
    }
  }

  auto run_rep = [&](int rep) {
    const std::uint64_t rep_seed = mix_seed(config.seed, static_cast<std::uint64_t>(rep));
    std::map<ScenarioKey, SimOutput> sims;
    std::optional<ArmHypers> shared;

    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
      const Variant& v = variants[vi];
      const ScenarioKey key{v.scenario.pool_size, v.scenario.n_obs, v.scenario.selection_scale};
      auto it = sims.find(key);
      if (it == sims.end()) {
        it = sims.emplace(key, simulate(v.scenario, rep_seed)).first;
      }
      const SimOutput& sim = it->second;
      VariantResult& vr = result.variants[vi];
      // One hyperparameter search at rho = 0.5 serves every sweep value of
      // the same replication when tuning runs in frozen mode.
      if (rho_sweep_sharing && !shared) {
        FitOptions opts = method_options(config, rep_seed, 0);
        const CausalIcmModel prelim =
            fit_causal_icm_cate(sim.rct, sim.obs, 0.5, v.kernel, opts);
        ArmHypers h;
        for (int a = 0; a < 2; ++a) {
          h.kernel[a] = prelim.arm_hypers[a].kernel;
          h.noise[a] = prelim.arm_hypers[a].noise_variance;
        }
        shared = h;
      }
      for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
        const MethodId method = config.methods[mi];
        vr.records[method][static_cast<std::size_t>(rep)] =
            run_one_method(method, v, sim, vr.grid, vr.true_tau, config, rep, rep_seed,
                           static_cast<int>(mi),
                           method == MethodId::CausalIcm ? shared : std::nullopt);
      }
    }
  };

  // The truth surface is deterministic given the scenario, so it is filled
  // once before any replication runs (and shared read-only across threads).
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    VariantResult& vr = result.variants[vi];
    const SimOutput probe = simulate(variants[vi].scenario, mix_seed(config.seed, 0));
    for (Eigen::Index j = 0; j < vr.grid.rows(); ++j) {
      vr.true_tau[j] = probe.truth.tau(vr.grid.row(j));
    }
  }

  int jobs = config.jobs > 0 ? config.jobs
                             : static_cast<int>(std::thread::hardware_concurrency());
  if (jobs < 1) jobs = 1;
  jobs = std::min(jobs, config.replications);
  if (jobs == 1) {
    for (int rep = 0; rep < config.replications; ++rep) run_rep(rep);
  } else {
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t) {
      workers.emplace_back([&, t] {
        for (int rep = t; rep < config.replications; rep += jobs) run_rep(rep);
      });
    }
    for (auto& w : workers) w.join();
  }

  for (auto& vr : result.variants) aggregate_variant(vr, config.replications);

  const OptimizerAuditStats audit_after = OptimizerAudit::snapshot();
  result.audit.fits = audit_after.fits - audit_before.fits;
  result.audit.violations = audit_after.violations - audit_before.violations;
  result.audit.worst_gap = audit_after.worst_gap;
  return result;
}

std::map<MethodId, TimingRow> runtime_bench(const BenchmarkConfig& config, int runs) {
  validate_config(config);
  if (runs < 1) throw ValidationError("runtime_bench: runs must be >= 1");
  const SimOutput sim = simulate(config.scenario, mix_seed(config.seed, 0));
  const Eigen::MatrixXd grid = eval_grid(config.scenario, config.grid_size);
  Eigen::VectorXd true_tau(grid.rows());
  for (Eigen::Index j = 0; j < grid.rows(); ++j) true_tau[j] = sim.truth.tau(grid.row(j));
  const Variant v{"", config.scenario, config.rho, config.kernel};

  std::map<MethodId, TimingRow> table;
  for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
    const MethodId method = config.methods[mi];
    std::vector<double> times;
    for (int r = 0; r <= runs; ++r) {  // run 0 is the warm-up
      const RepRecord rec =
          run_one_method(method, v, sim, grid, true_tau, config, r, mix_seed(config.seed, 0),
                         static_cast<int>(mi), std::nullopt);
      if (!rec.ok) throw NumericalError("runtime_bench: " + method_name(method) + " failed: " + rec.error);
      if (r > 0) times.push_back(rec.seconds);
    }
    std::sort(times.begin(), times.end());
    TimingRow row;
    row.runs = static_cast<int>(times.size());
    row.min = times.front();
    row.max = times.back();
    const std::size_t n = times.size();
    row.median = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
    double mean = 0.0;
    for (double t : times) mean += t;
    row.mean = mean / static_cast<double>(n);
    if (n > 1) {
      double ss = 0.0;
      for (double t : times) ss += (t - row.mean) * (t - row.mean);
      row.sd = std::sqrt(ss / static_cast<double>(n - 1));
    }
    table[method] = row;
  }
  return table;
}

namespace {

std::string qualified_method(const VariantResult& vr, MethodId m) {
  if (vr.label.empty()) return method_name(m);
  return method_name(m) + "[" + vr.label + "]";
}

}  // namespace

void write_results_csv(const std::string& path, const BenchmarkResult& result) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out.precision(12);
  out << "method,seed,metric,value\n";
  for (const auto& vr : result.variants) {
    for (const auto& [method, records] : vr.records) {
      const std::string name = qualified_method(vr, method);
      for (const RepRecord& r : records) {
        const std::uint64_t seed = mix_seed(result.config.seed, static_cast<std::uint64_t>(r.rep));
        if (!r.ok) {
          out << name << "," << seed << ",failed,1\n";
          continue;
        }
        out << name << "," << seed << ",rmse," << r.rmse_value << "\n";
        out << name << "," << seed << ",seconds," << r.seconds << "\n";
        if (!std::isnan(r.chosen_rho)) out << name << "," << seed << ",chosen_rho," << r.chosen_rho << "\n";
        if (r.in_mse) out << name << "," << seed << ",in_mse," << *r.in_mse << "\n";
        if (r.out_mse) out << name << "," << seed << ",out_mse," << *r.out_mse << "\n";
      }
    }
  }
}

nlohmann::json summary_json(const BenchmarkResult& result) {
  nlohmann::json j;
  j["scenario"] = scenario_name(result.config.scenario.id);
  j["replications"] = result.config.replications;
  j["grid_size"] = result.config.grid_size;
  j["seed"] = result.config.seed;
  j["level"] = result.config.level;
  j["variants"] = nlohmann::json::array();
  for (const auto& vr : result.variants) {
    nlohmann::json vj;
    vj["variant"] = vr.label;
    vj["n_obs"] = vr.scenario.n_obs;
    vj["selection_scale"] = vr.scenario.selection_scale;
    vj["kernel"] = kernel_family_name(vr.kernel);
    if (vr.rho) {
      vj["rho"] = *vr.rho;
    } else {
      vj["rho"] = "auto";
    }
    nlohmann::json methods;
    for (const auto& [method, agg] : vr.aggregates) {
      nlohmann::json mj;
      mj["mean_rmse"] = agg.mean_rmse;
      mj["sd_rmse"] = agg.sd_rmse;
      mj["successes"] = agg.successes;
      mj["failures"] = agg.failures;
      mj["mean_seconds"] = agg.mean_seconds;
      mj["mean_coverage"] = agg.mean_coverage;
      if (!std::isnan(agg.mean_chosen_rho)) mj["mean_chosen_rho"] = agg.mean_chosen_rho;
      if (agg.mean_in_mse) mj["mean_in_mse"] = *agg.mean_in_mse;
      if (agg.mean_out_mse) mj["mean_out_mse"] = *agg.mean_out_mse;
      methods[method_name(method)] = mj;
    }
    vj["methods"] = methods;
    j["variants"].push_back(vj);
  }
  j["optimizer_audit"] = {{"fits", result.audit.fits},
                          {"violations", result.audit.violations},
                          {"worst_gap", result.audit.worst_gap}};
  return j;
}

void write_summary_json(const std::string& path, const BenchmarkResult& result) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << summary_json(result).dump(2) << "\n";
}

void write_coverage_csv(const std::string& path, const BenchmarkResult& result) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out.precision(12);
  out << "x,method,rate\n";
  for (const auto& vr : result.variants) {
    for (const auto& [method, agg] : vr.aggregates) {
      if (agg.coverage.size() == 0) continue;
      for (Eigen::Index jdx = 0; jdx < agg.coverage.size(); ++jdx) {
        // 1-D grids report the coordinate, higher dimensions the row index.
        const double x = vr.grid.cols() == 1 ? vr.grid(jdx, 0) : static_cast<double>(jdx);
        out << x << "," << qualified_method(vr, method) << "," << agg.coverage[jdx] << "\n";
      }
    }
  }
}

namespace {

void check_known_fields(const nlohmann::json& j, const std::vector<std::string>& allowed,
                        const std::string& prefix) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw ValidationError("config: unknown field " + prefix + "/" + it.key());
    }
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("config: field /" + key + " has the wrong type");
  }
}

}  // namespace

BenchmarkConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config: root must be a JSON object");
  check_known_fields(j, {"scenario", "pool_size", "n_obs", "selection_scale", "methods",
                         "replications", "rho", "grid_size", "seed", "kernel", "level", "folds",
                         "tune_mode", "restarts", "jobs", "sweeps"},
                     "");
  if (!j.contains("scenario")) throw ValidationError("config: missing field /scenario");

  BenchmarkConfig c;
  const ScenarioId id = parse_scenario(get_or<std::string>(j, "scenario", "uni1"));
  c.scenario = make_scenario(id, get_or<int>(j, "pool_size", 1000), get_or<int>(j, "n_obs", 1000),
                             get_or<double>(j, "selection_scale", 1.0));
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : get_or<std::vector<std::string>>(j, "methods", {})) {
      c.methods.push_back(parse_method(m));
    }
  }
  c.replications = get_or<int>(j, "replications", c.replications);
  if (j.contains("rho")) {
    const auto& r = j.at("rho");
    if (r.is_string()) {
      if (r.get<std::string>() != "auto") {
        throw ValidationError("config: field /rho must be a number in [0,1] or \"auto\"");
      }
      c.rho.reset();
    } else if (r.is_number()) {
      c.rho = r.get<double>();
      coregionalization_matrix(*c.rho);
    } else {
      throw ValidationError("config: field /rho must be a number in [0,1] or \"auto\"");
    }
  }
  c.grid_size = get_or<int>(j, "grid_size", c.grid_size);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.kernel = parse_kernel_family(get_or<std::string>(j, "kernel", "rbf"));
  c.level = get_or<double>(j, "level", c.level);
  c.folds = get_or<int>(j, "folds", c.folds);
  const std::string mode = get_or<std::string>(j, "tune_mode", "fast");
  if (mode == "fast" || mode == "frozen") {
    c.tune_mode = TuneMode::Frozen;
  } else if (mode == "refit") {
    c.tune_mode = TuneMode::Refit;
  } else {
    throw ValidationError("config: field /tune_mode must be \"refit\" or \"fast\"");
  }
  c.restarts = get_or<int>(j, "restarts", c.restarts);
  if (c.restarts < 1) throw ValidationError("config: field /restarts must be >= 1");
  c.jobs = get_or<int>(j, "jobs", c.jobs);
  if (c.jobs < 0) throw ValidationError("config: field /jobs must be >= 0");
  if (j.contains("sweeps")) {
    const auto& s = j.at("sweeps");
    if (!s.is_object()) throw ValidationError("config: field /sweeps must be an object");
    check_known_fields(s, {"rho_grid", "kernel_families", "n_obs_list", "overlap_levels"},
                       "/sweeps");
    c.sweeps.rho_grid = get_or<std::vector<double>>(s, "rho_grid", {});
    for (const auto& f : get_or<std::vector<std::string>>(s, "kernel_families", {})) {
      c.sweeps.kernel_families.push_back(parse_kernel_family(f));
    }
    c.sweeps.n_obs_list = get_or<std::vector<int>>(s, "n_obs_list", {});
    c.sweeps.overlap_levels = get_or<std::vector<double>>(s, "overlap_levels", {});
  }
  validate_config(c);
  return c;
}

}  // namespace cicm
