#pragma once

#include <Eigen/Dense>
#include <string>

#include "cicm/errors.hpp"
#include "nlohmann/json.hpp"

namespace cicm {

enum class KernelFamily { RBF, Matern32, Matern52 };

// Stationary ARD kernel: k(x,x') = variance * g(r), with r the lengthscale-
// scaled Euclidean distance and g the family's radial profile.  Hyperparameters
// live here in natural space; the optimizer works on logs.
struct KernelSpec {
  KernelFamily family = KernelFamily::RBF;
  Eigen::VectorXd lengthscales;  // one per input dimension
  double variance = 1.0;
};

void validate_kernel_spec(const KernelSpec& spec);

double eval_kernel(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& xp);

// Cross-covariance matrix, entry (i,j) = k(row i of X, row j of Xp).
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X,
                              const Eigen::MatrixXd& Xp);

// Symmetric self-covariance K(X,X); diagonal equals the signal variance.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X);

// k(X, x*) as a column vector.
Eigen::VectorXd kernel_vector(const KernelSpec& spec, const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& xstar);

std::string kernel_family_name(KernelFamily family);
KernelFamily parse_kernel_family(const std::string& name);

nlohmann::json kernel_to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const nlohmann::json& j);

}  // namespace cicm
