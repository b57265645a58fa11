#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "cicm/kernels.hpp"

namespace cicm {

// Box-constrained Nelder-Mead maximizer.  Hyperparameters are searched in
// natural-log space; the box keeps every parameter within [1e-6, 1e6].
struct NelderMeadOptions {
  int max_iters = 500;
  double spread_tol = 1e-6;   // stop when max - min objective over the simplex drops below
  double init_step = 0.5;     // log-space offset used to build the initial simplex
  double lower = -6.0 * 2.302585092994046;  // log(1e-6)
  double upper = 6.0 * 2.302585092994046;   // log(1e6)
};

struct NelderMeadResult {
  Eigen::VectorXd best;
  double best_value = 0.0;
  int evaluations = 0;
};

NelderMeadResult nelder_mead_maximize(const std::function<double(const Eigen::VectorXd&)>& f,
                                      const Eigen::VectorXd& init,
                                      const NelderMeadOptions& opts = {});

// Result of a hyperparameter search.  initial_objective is the objective at
// the default initialization, final_objective the best value found; the
// optimizer contract final >= initial is recorded in the audit registry.
struct OptimizedHypers {
  KernelSpec kernel;
  double noise_variance = 0.0;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int evaluations = 0;
};

// Objective over (kernel, noise_variance), maximized.  Implementations should
// throw NumericalError (or return non-finite) for infeasible points; those
// evaluations count as -inf.
using HyperObjective = std::function<double(const KernelSpec&, double)>;

// Shared restart protocol: Nelder-Mead over [log lengthscales, log variance,
// log noise], restarted from the default initialization and 0.1x / 10x scale
// shifts; restarts beyond three start from seeded random offsets.  The best
// result across restarts wins (ties to the earlier restart).
OptimizedHypers optimize_kernel_hyperparameters(const HyperObjective& objective, Eigen::Index dim,
                                                KernelFamily family,
                                                const Eigen::VectorXd& y_for_init, int restarts,
                                                std::uint64_t seed);

// Single-task convenience wrapper: maximizes the GP log marginal likelihood.
OptimizedHypers optimize_hyperparameters(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                         KernelFamily family, int restarts, std::uint64_t seed);

// Process-global record of every hyperparameter search, used to assert the
// "final objective never below the initial objective" contract across a run.
struct OptimizerAuditStats {
  long long fits = 0;
  long long violations = 0;
  double worst_gap = 0.0;  // most negative (final - initial) seen, 0 if none negative
};

class OptimizerAudit {
 public:
  static void record(double initial, double final_value);
  static OptimizerAuditStats snapshot();
  static void reset();
};

}  // namespace cicm
