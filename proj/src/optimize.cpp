#include "cicm/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <vector>

#include "cicm/errors.hpp"
#include "cicm/gp.hpp"
#include "cicm/rng.hpp"

namespace cicm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::VectorXd clamp_to_box(Eigen::VectorXd v, const NelderMeadOptions& opts) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = std::min(std::max(v[i], opts.lower), opts.upper);
  }
  return v;
}

struct Vertex {
  Eigen::VectorXd x;
  double value;
};

}  // namespace

NelderMeadResult nelder_mead_maximize(const std::function<double(const Eigen::VectorXd&)>& f,
                                      const Eigen::VectorXd& init, const NelderMeadOptions& opts) {
  const Eigen::Index d = init.size();
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : kNegInf;
  };

  std::vector<Vertex> simplex;
  simplex.reserve(d + 1);
  Eigen::VectorXd v0 = clamp_to_box(init, opts);
  simplex.push_back({v0, eval(v0)});
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::VectorXd vi = v0;
    vi[i] += opts.init_step;
    vi = clamp_to_box(vi, opts);
    simplex.push_back({vi, eval(vi)});
  }

  auto by_value_desc = [](const Vertex& a, const Vertex& b) { return a.value > b.value; };

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    std::sort(simplex.begin(), simplex.end(), by_value_desc);
    const double spread = simplex.front().value - simplex.back().value;
    if (!std::isfinite(spread) && simplex.front().value == kNegInf) break;  // nothing feasible
    if (std::isfinite(spread) && spread < opts.spread_tol) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (Eigen::Index i = 0; i < d; ++i) centroid += simplex[i].x;
    centroid /= static_cast<double>(d);
    Vertex& worst = simplex.back();

    const Eigen::VectorXd xr = clamp_to_box(centroid + (centroid - worst.x), opts);
    const double fr = eval(xr);
    if (fr > simplex.front().value) {
      const Eigen::VectorXd xe = clamp_to_box(centroid + 2.0 * (centroid - worst.x), opts);
      const double fe = eval(xe);
      if (fe > fr) {
        worst = {xe, fe};
      } else {
        worst = {xr, fr};
      }
    } else if (fr > simplex[d - 1].value) {
      worst = {xr, fr};
    } else if (fr > worst.value) {
      const Eigen::VectorXd xc = clamp_to_box(centroid + 0.5 * (centroid - worst.x), opts);
      const double fc = eval(xc);
      if (fc >= fr) {
        worst = {xc, fc};
      } else {
        for (Eigen::Index i = 1; i <= d; ++i) {
          simplex[i].x = simplex[0].x + 0.5 * (simplex[i].x - simplex[0].x);
          simplex[i].value = eval(simplex[i].x);
        }
      }
    } else {
      const Eigen::VectorXd xc = clamp_to_box(centroid - 0.5 * (centroid - worst.x), opts);
      const double fc = eval(xc);
      if (fc > worst.value) {
        worst = {xc, fc};
      } else {
        for (Eigen::Index i = 1; i <= d; ++i) {
          simplex[i].x = simplex[0].x + 0.5 * (simplex[i].x - simplex[0].x);
          simplex[i].value = eval(simplex[i].x);
        }
      }
    }
  }

  std::sort(simplex.begin(), simplex.end(), by_value_desc);
  return {simplex.front().x, simplex.front().value, evals};
}

namespace {

// theta layout: [log l_1 .. log l_p, log signal variance, log noise variance]
KernelSpec theta_to_kernel(const Eigen::VectorXd& theta, Eigen::Index dim, KernelFamily family) {
  KernelSpec spec;
  spec.family = family;
  spec.lengthscales = theta.head(dim).array().exp();
  spec.variance = std::exp(theta[dim]);
  return spec;
}

Eigen::VectorXd default_init(Eigen::Index dim, const Eigen::VectorXd& y_for_init) {
  const Eigen::Index n = y_for_init.size();
  double yvar = 1.0;
  if (n > 1) {
    const double mean = y_for_init.mean();
    yvar = (y_for_init.array() - mean).square().sum() / static_cast<double>(n - 1);
  }
  yvar = std::max(yvar, 1e-6);
  Eigen::VectorXd theta(dim + 2);
  theta.head(dim).setZero();  // lengthscales 1
  theta[dim] = std::log(yvar);
  theta[dim + 1] = std::log(std::max(0.1 * yvar, 1e-6));
  return theta;
}

}  // namespace

OptimizedHypers optimize_kernel_hyperparameters(const HyperObjective& objective, Eigen::Index dim,
                                                KernelFamily family,
                                                const Eigen::VectorXd& y_for_init, int restarts,
                                                std::uint64_t seed) {
  if (restarts < 1) throw ValidationError("optimize: restarts must be >= 1");
  NelderMeadOptions opts;
  auto f = [&](const Eigen::VectorXd& theta) -> double {
    const KernelSpec spec = theta_to_kernel(theta, dim, family);
    const double noise = std::exp(theta[dim + 1]);
    try {
      const double v = objective(spec, noise);
      return std::isfinite(v) ? v : kNegInf;
    } catch (const NumericalError&) {
      return kNegInf;
    }
  };

  const Eigen::VectorXd base = clamp_to_box(default_init(dim, y_for_init), opts);
  const double initial_objective = f(base);

  OptimizedHypers out;
  out.evaluations = 1;
  double best = kNegInf;
  Eigen::VectorXd best_theta;
  for (int r = 0; r < restarts; ++r) {
    Eigen::VectorXd init = base;
    if (r == 1) {
      init.array() += std::log(0.1);
    } else if (r == 2) {
      init.array() += std::log(10.0);
    } else if (r >= 3) {
      Philox gen(mix_seed(seed, 100 + static_cast<std::uint64_t>(r)));
      for (Eigen::Index i = 0; i < init.size(); ++i) init[i] += gen.uniform(-2.0, 2.0);
    }
    const NelderMeadResult res = nelder_mead_maximize(f, init, opts);
    out.evaluations += res.evaluations;
    if (res.best_value > best) {
      best = res.best_value;
      best_theta = res.best;
    }
  }
  if (!std::isfinite(best)) {
    throw NumericalError("hyperparameter optimization: every restart failed factorization");
  }

  out.kernel = theta_to_kernel(best_theta, dim, family);
  out.noise_variance = std::exp(best_theta[dim + 1]);
  out.initial_objective = initial_objective;
  out.final_objective = best;
  OptimizerAudit::record(initial_objective, best);
  return out;
}

OptimizedHypers optimize_hyperparameters(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                         KernelFamily family, int restarts, std::uint64_t seed) {
  if (X.rows() < 2) {
    throw DataShapeError("optimize_hyperparameters: need at least 2 training points");
  }
  if (X.rows() != y.size()) {
    throw DataShapeError("optimize_hyperparameters: X/y row mismatch");
  }
  auto objective = [&](const KernelSpec& spec, double noise) {
    return log_marginal_likelihood(gp_fit(X, y, spec, noise));
  };
  return optimize_kernel_hyperparameters(objective, X.cols(), family, y, restarts, seed);
}

namespace {
std::mutex audit_mutex;
OptimizerAuditStats audit_stats;
}  // namespace

void OptimizerAudit::record(double initial, double final_value) {
  std::lock_guard<std::mutex> lock(audit_mutex);
  ++audit_stats.fits;
  const double gap = final_value - initial;
  if (gap < 0.0) {
    ++audit_stats.violations;
    audit_stats.worst_gap = std::min(audit_stats.worst_gap, gap);
  }
}

OptimizerAuditStats OptimizerAudit::snapshot() {
  std::lock_guard<std::mutex> lock(audit_mutex);
  return audit_stats;
}

void OptimizerAudit::reset() {
  std::lock_guard<std::mutex> lock(audit_mutex);
  audit_stats = {};
}

}  // namespace cicm
