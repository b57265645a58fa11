#pragma once

#include <Eigen/Dense>

namespace cicm {

struct CholFactor {
  Eigen::MatrixXd L;    // lower triangular
  double jitter = 0.0;  // amount added to the diagonal, 0 if none was needed
};

// Cholesky factorization with a jitter ladder: on failure, add eps to the
// diagonal starting at 1e-10 * mean(diag) and multiplying by 10 up to
// 1e-4 * mean(diag).  Throws NumericalError with diagnostics if the ladder is
// exhausted.
CholFactor cholesky_with_jitter(const Eigen::MatrixXd& A);

// Solve L L^T x = b given the lower factor.
Eigen::VectorXd chol_solve(const Eigen::MatrixXd& L, const Eigen::VectorXd& b);

}  // namespace cicm
