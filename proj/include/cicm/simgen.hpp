#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>

#include "cicm/data.hpp"

namespace cicm {

enum class ScenarioId { Uni1, Uni2, Multi1, Multi2 };

struct SimScenario {
  ScenarioId id = ScenarioId::Uni1;
  int dim = 1;               // 1 for Uni*, 5 for Multi*
  int pool_size = 1000;      // trial candidate pool; selected units form the trial
  int n_obs = 1000;
  double selection_scale = 1.0;  // multiplies the selection logit (overlap knob)
};

SimScenario make_scenario(ScenarioId id, int pool_size = 1000, int n_obs = 1000,
                          double selection_scale = 1.0);

// Deterministic functions of the covariate vector.  eta is the stated
// confounding effect 2*g(x); obs_contrast is the arm contrast the
// observational outcome model actually implies, tau(x) + 2*g(x), kept
// separate so the sign convention can be checked empirically instead of
// assumed.
struct GroundTruth {
  std::function<double(const Eigen::VectorXd&)> tau;
  std::function<double(const Eigen::VectorXd&)> eta;
  std::function<double(const Eigen::VectorXd&)> obs_contrast;
};

struct SimOutput {
  Dataset rct;
  Dataset obs;
  GroundTruth truth;
};

// Draws both studies from one seeded stream.  Order of draws:
//   1. trial pool covariates (pool_size x dim uniforms on [-2,2], row-major),
//   2. trial selection indicators (pool_size Bernoullis),
//   3. trial treatments (one Bernoulli(1/2) per selected unit),
//   4. trial outcome noise (one normal per selected unit),
//   5. observational covariates (n_obs x dim uniforms),
//   6. observational treatments (n_obs Bernoullis),
//   7. observational confounder draws (n_obs normals),
//   8. observational outcome noise (n_obs normals).
// The trial outcome has no confounder term, so stage 4 follows stage 3
// directly.
SimOutput simulate(const SimScenario& scenario, std::uint64_t seed);

// Evaluation points covering the observational covariate distribution:
// equispaced on [-2,2] for the univariate scenarios, an internally seeded
// uniform sample of the box for the multivariate ones.
Eigen::MatrixXd eval_grid(const SimScenario& scenario, int n_points);

std::string scenario_name(ScenarioId id);
ScenarioId parse_scenario(const std::string& name);

}  // namespace cicm
