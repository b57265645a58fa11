#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>

namespace cicm {

enum class Study { Experimental, Observational };

// One study's observed data: covariates, outcome, treatment indicator.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXi a;
  Study study = Study::Experimental;
};

// Covariates and outcomes for a single (study, arm) cell.
struct ArmDataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;

  Eigen::Index n() const { return X.rows(); }
  bool empty() const { return X.rows() == 0; }
};

// Throws DataShapeError when row counts disagree or a is not binary.
void validate_dataset(const Dataset& data, const std::string& label);

// Splits by treatment indicator; result[a] holds the rows with A = a.
// Either side may be empty; fitting code rejects empty cells itself.
std::array<ArmDataset, 2> split_by_arm(const Dataset& data);

// Per-dimension affine map to zero mean, unit scale.  Dimensions with
// (near-)zero spread get scale 1 so constants pass through unchanged.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& X);
  static Standardizer identity(Eigen::Index dim);
  Eigen::MatrixXd transform(const Eigen::MatrixXd& X) const;
};

// CSV I/O for the CLI.  Training files carry columns x1..xp,y,a; test files
// x1..xp.  Header row is mandatory.  Parse problems throw ValidationError
// with the offending line number or column name.
Dataset read_dataset_csv(const std::string& path, Study study);
Eigen::MatrixXd read_covariates_csv(const std::string& path);
void write_dataset_csv(const std::string& path, const Dataset& data);

}  // namespace cicm
