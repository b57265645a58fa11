#include "cicm/data.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "cicm/errors.hpp"

namespace cicm {

void validate_dataset(const Dataset& data, const std::string& label) {
  if (data.X.rows() != data.y.size() || data.X.rows() != data.a.size()) {
    throw DataShapeError(label + ": X has " + std::to_string(data.X.rows()) + " rows, y has " +
                         std::to_string(data.y.size()) + ", a has " +
                         std::to_string(data.a.size()));
  }
  for (Eigen::Index i = 0; i < data.a.size(); ++i) {
    if (data.a[i] != 0 && data.a[i] != 1) {
      throw DataShapeError(label + ": treatment indicator at row " + std::to_string(i) +
                           " is " + std::to_string(data.a[i]) + ", expected 0 or 1");
    }
  }
}

std::array<ArmDataset, 2> split_by_arm(const Dataset& data) {
  std::array<ArmDataset, 2> out;
  for (int arm = 0; arm < 2; ++arm) {
    Eigen::Index n = 0;
    for (Eigen::Index i = 0; i < data.a.size(); ++i) n += (data.a[i] == arm);
    out[arm].X.resize(n, data.X.cols());
    out[arm].y.resize(n);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < data.a.size(); ++i) {
      if (data.a[i] == arm) {
        out[arm].X.row(r) = data.X.row(i);
        out[arm].y[r] = data.y[i];
        ++r;
      }
    }
  }
  return out;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
  Standardizer s;
  const Eigen::Index n = X.rows(), p = X.cols();
  s.mean = X.colwise().mean();
  s.scale.resize(p);
  for (Eigen::Index d = 0; d < p; ++d) {
    const double var = n > 1 ? (X.col(d).array() - s.mean[d]).square().sum() / (n - 1) : 0.0;
    const double sd = std::sqrt(var);
    s.scale[d] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Standardizer Standardizer::identity(Eigen::Index dim) {
  Standardizer s;
  s.mean = Eigen::VectorXd::Zero(dim);
  s.scale = Eigen::VectorXd::Ones(dim);
  return s;
}

Eigen::MatrixXd Standardizer::transform(const Eigen::MatrixXd& X) const {
  if (X.cols() != mean.size()) {
    throw DataShapeError("standardizer: input has " + std::to_string(X.cols()) +
                         " columns, expected " + std::to_string(mean.size()));
  }
  return (X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_number(const std::string& s, const std::string& path, std::size_t lineno) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(path + ": malformed value '" + s + "' at line " +
                          std::to_string(lineno));
  }
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // rows of parsed numbers
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_line(line);
    if (lineno == 1) {
      t.header = fields;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw ValidationError(path + ": expected " + std::to_string(t.header.size()) +
                            " fields but got " + std::to_string(fields.size()) + " at line " +
                            std::to_string(lineno));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_number(f, path, lineno));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ValidationError(path + ": empty file (missing header)");
  return t;
}

// Expects columns x1..xp then, if with_outcome, y and a (in that order).
Eigen::Index check_header(const CsvTable& t, const std::string& path, bool with_outcome) {
  const std::size_t extra = with_outcome ? 2 : 0;
  if (t.header.size() <= extra) {
    throw ValidationError(path + ": no covariate columns in header");
  }
  const Eigen::Index p = static_cast<Eigen::Index>(t.header.size() - extra);
  for (Eigen::Index d = 0; d < p; ++d) {
    const std::string want = "x" + std::to_string(d + 1);
    if (t.header[d] != want) {
      throw ValidationError(path + ": expected column '" + want + "' at position " +
                            std::to_string(d + 1) + ", found '" + t.header[d] + "'");
    }
  }
  if (with_outcome) {
    if (t.header[p] != "y") throw ValidationError(path + ": expected column 'y', found '" + t.header[p] + "'");
    if (t.header[p + 1] != "a") throw ValidationError(path + ": expected column 'a', found '" + t.header[p + 1] + "'");
  }
  return p;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path, Study study) {
  const CsvTable t = read_csv(path);
  const Eigen::Index p = check_header(t, path, true);
  const Eigen::Index n = static_cast<Eigen::Index>(t.rows.size());
  Dataset d;
  d.study = study;
  d.X.resize(n, p);
  d.y.resize(n);
  d.a.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < p; ++c) d.X(i, c) = t.rows[i][c];
    d.y[i] = t.rows[i][p];
    const double av = t.rows[i][p + 1];
    if (av != 0.0 && av != 1.0) {
      throw DataShapeError(path + ": treatment column must be 0 or 1, got " +
                           std::to_string(av) + " at line " + std::to_string(i + 2));
    }
    d.a[i] = static_cast<int>(av);
  }
  return d;
}

Eigen::MatrixXd read_covariates_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const Eigen::Index p = check_header(t, path, false);
  const Eigen::Index n = static_cast<Eigen::Index>(t.rows.size());
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < p; ++c) X(i, c) = t.rows[i][c];
  return X;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out.precision(17);
  for (Eigen::Index d = 0; d < data.X.cols(); ++d) out << "x" << (d + 1) << ",";
  out << "y,a\n";
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    for (Eigen::Index d = 0; d < data.X.cols(); ++d) out << data.X(i, d) << ",";
    out << data.y[i] << "," << data.a[i] << "\n";
  }
}

}  // namespace cicm
