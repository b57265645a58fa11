#include "cicm/kernels.hpp"

#include <cmath>

namespace cicm {

namespace {

// Squared scaled distance, accumulated per dimension.  Working with r^2 and
// taking the square root only for the Matern profiles avoids cancellation in
// the near-zero-distance regime.
double scaled_sq_dist(const KernelSpec& spec, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& xp) {
  double r2 = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double u = (x[d] - xp[d]) / spec.lengthscales[d];
    r2 += u * u;
  }
  return r2;
}

double radial_profile(KernelFamily family, double r2) {
  switch (family) {
    case KernelFamily::RBF:
      return std::exp(-0.5 * r2);
    case KernelFamily::Matern32: {
      const double t = std::sqrt(3.0 * r2);
      return (1.0 + t) * std::exp(-t);
    }
    case KernelFamily::Matern52: {
      const double t = std::sqrt(5.0 * r2);
      return (1.0 + t + t * t / 3.0) * std::exp(-t);
    }
  }
  return 0.0;  // unreachable
}

void check_dim(const KernelSpec& spec, Eigen::Index dim, const char* what) {
  if (dim != spec.lengthscales.size()) {
    throw ValidationError(std::string(what) + ": input dimension " + std::to_string(dim) +
                          " does not match lengthscale dimension " +
                          std::to_string(spec.lengthscales.size()));
  }
}

}  // namespace

void validate_kernel_spec(const KernelSpec& spec) {
  if (spec.lengthscales.size() == 0) {
    throw ValidationError("kernel: lengthscales must be non-empty");
  }
  for (Eigen::Index d = 0; d < spec.lengthscales.size(); ++d) {
    const double l = spec.lengthscales[d];
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw ValidationError("kernel: lengthscale[" + std::to_string(d) +
                            "] must be positive and finite");
    }
  }
  if (!(spec.variance > 0.0) || !std::isfinite(spec.variance)) {
    throw ValidationError("kernel: variance must be positive and finite");
  }
}

double eval_kernel(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& xp) {
  validate_kernel_spec(spec);
  check_dim(spec, x.size(), "eval_kernel");
  check_dim(spec, xp.size(), "eval_kernel");
  return spec.variance * radial_profile(spec.family, scaled_sq_dist(spec, x, xp));
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X,
                              const Eigen::MatrixXd& Xp) {
  validate_kernel_spec(spec);
  check_dim(spec, X.cols(), "kernel_matrix");
  check_dim(spec, Xp.cols(), "kernel_matrix");
  const Eigen::Index n = X.rows(), m = Xp.rows(), p = X.cols();
  Eigen::MatrixXd K(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double r2 = 0.0;
      for (Eigen::Index d = 0; d < p; ++d) {
        const double u = (X(i, d) - Xp(j, d)) / spec.lengthscales[d];
        r2 += u * u;
      }
      K(i, j) = spec.variance * radial_profile(spec.family, r2);
    }
  }
  return K;
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X) {
  validate_kernel_spec(spec);
  check_dim(spec, X.cols(), "kernel_matrix");
  const Eigen::Index n = X.rows(), p = X.cols();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    K(j, j) = spec.variance;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double r2 = 0.0;
      for (Eigen::Index d = 0; d < p; ++d) {
        const double u = (X(i, d) - X(j, d)) / spec.lengthscales[d];
        r2 += u * u;
      }
      const double v = spec.variance * radial_profile(spec.family, r2);
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

Eigen::VectorXd kernel_vector(const KernelSpec& spec, const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& xstar) {
  validate_kernel_spec(spec);
  check_dim(spec, X.cols(), "kernel_vector");
  check_dim(spec, xstar.size(), "kernel_vector");
  const Eigen::Index n = X.rows(), p = X.cols();
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double r2 = 0.0;
    for (Eigen::Index d = 0; d < p; ++d) {
      const double u = (X(i, d) - xstar[d]) / spec.lengthscales[d];
      r2 += u * u;
    }
    k[i] = spec.variance * radial_profile(spec.family, r2);
  }
  return k;
}

std::string kernel_family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::RBF:
      return "rbf";
    case KernelFamily::Matern32:
      return "matern32";
    case KernelFamily::Matern52:
      return "matern52";
  }
  return "rbf";
}

KernelFamily parse_kernel_family(const std::string& name) {
  if (name == "rbf") return KernelFamily::RBF;
  if (name == "matern32") return KernelFamily::Matern32;
  if (name == "matern52") return KernelFamily::Matern52;
  throw ValidationError("unknown kernel family '" + name +
                        "' (expected rbf, matern32, or matern52)");
}

nlohmann::json kernel_to_json(const KernelSpec& spec) {
  return {{"family", kernel_family_name(spec.family)},
          {"lengthscales", std::vector<double>(spec.lengthscales.begin(), spec.lengthscales.end())},
          {"variance", spec.variance}};
}

KernelSpec kernel_from_json(const nlohmann::json& j) {
  KernelSpec spec;
  try {
    spec.family = parse_kernel_family(j.at("family").get<std::string>());
    const auto ls = j.at("lengthscales").get<std::vector<double>>();
    spec.lengthscales = Eigen::Map<const Eigen::VectorXd>(ls.data(), static_cast<Eigen::Index>(ls.size()));
    spec.variance = j.at("variance").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("kernel json: ") + e.what());
  }
  validate_kernel_spec(spec);
  return spec;
}

}  // namespace cicm
