#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "cicm/data.hpp"
#include "cicm/errors.hpp"
#include "cicm/rng.hpp"
#include "doctest.h"

using namespace cicm;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path p = fs::temp_directory_path() / "cicm_data_tests";
  fs::create_directories(p);
  return p;
}

std::string write_text(const std::string& name, const std::string& body) {
  const fs::path p = scratch_dir() / name;
  std::ofstream out(p);
  out << body;
  return p.string();
}

Dataset small_dataset() {
  Dataset d;
  d.X.resize(4, 2);
  d.X << 0.0, 1.0, -1.5, 2.0, 0.5, -0.5, 2.0, 0.0;
  d.y.resize(4);
  d.y << 1.0, -2.0, 0.5, 3.0;
  d.a.resize(4);
  d.a << 0, 1, 1, 0;
  d.study = Study::Observational;
  return d;
}

}  // namespace

TEST_CASE("splitting by arm preserves rows and order") {
  const Dataset d = small_dataset();
  const auto arms = split_by_arm(d);
  REQUIRE(arms[0].n() == 2);
  REQUIRE(arms[1].n() == 2);
  CHECK(arms[0].X(0, 0) == 0.0);
  CHECK(arms[0].X(1, 0) == 2.0);
  CHECK(arms[0].y[1] == 3.0);
  CHECK(arms[1].X(0, 0) == -1.5);
  CHECK(arms[1].y[0] == -2.0);
  CHECK_FALSE(arms[0].empty());
}

TEST_CASE("dataset validation rejects shape and label problems") {
  Dataset d = small_dataset();
  CHECK_NOTHROW(validate_dataset(d, "ok"));

  d.a[2] = 2;
  CHECK_THROWS_AS(validate_dataset(d, "labels"), DataShapeError);

  d = small_dataset();
  d.y.resize(3);
  CHECK_THROWS_AS(validate_dataset(d, "rows"), DataShapeError);
}

TEST_CASE("standardizer centers and scales by sample statistics") {
  Eigen::MatrixXd X(3, 2);
  X << 1.0, 5.0, 2.0, 5.0, 3.0, 5.0;
  const Standardizer s = Standardizer::fit(X);
  CHECK(s.mean[0] == doctest::Approx(2.0));
  CHECK(s.mean[1] == doctest::Approx(5.0));
  CHECK(s.scale[0] == doctest::Approx(1.0));  // sample sd of {1,2,3}
  CHECK(s.scale[1] == doctest::Approx(1.0));  // constant column falls back to 1

  const Eigen::MatrixXd Z = s.transform(X);
  CHECK(Z(0, 0) == doctest::Approx(-1.0));
  CHECK(Z(2, 0) == doctest::Approx(1.0));
  CHECK(Z.col(1).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  const Standardizer id = Standardizer::identity(2);
  CHECK((id.transform(X) - X).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  Eigen::MatrixXd wrong(2, 3);
  wrong.setZero();
  CHECK_THROWS_AS(s.transform(wrong), DataShapeError);
}

TEST_CASE("csv round trip preserves the dataset") {
  const Dataset d = small_dataset();
  const std::string path = (scratch_dir() / "roundtrip.csv").string();
  write_dataset_csv(path, d);
  const Dataset back = read_dataset_csv(path, Study::Observational);
  REQUIRE(back.X.rows() == 4);
  REQUIRE(back.X.cols() == 2);
  CHECK((back.X - d.X).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((back.y - d.y).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((back.a - d.a).cwiseAbs().maxCoeff() == 0);
  CHECK(back.study == Study::Observational);
}

TEST_CASE("malformed csv rows are reported with their line number") {
  const std::string path =
      write_text("badrow.csv", "x1,y,a\n0.5,1.0,0\n0.25,oops,1\n");
  CHECK_THROWS_WITH_AS(read_dataset_csv(path, Study::Experimental),
                       doctest::Contains("line 3"), ValidationError);

  const std::string missing =
      write_text("missing_field.csv", "x1,y,a\n0.5,1.0\n");
  CHECK_THROWS_WITH_AS(read_dataset_csv(missing, Study::Experimental),
                       doctest::Contains("line 2"), ValidationError);
}

TEST_CASE("headers must name the expected columns") {
  const std::string path = write_text("badheader.csv", "x1,z,a\n0.5,1.0,0\n");
  CHECK_THROWS_WITH_AS(read_dataset_csv(path, Study::Experimental),
                       doctest::Contains("'y'"), ValidationError);

  const std::string bad_x = write_text("badx.csv", "u1,y,a\n0.5,1.0,0\n");
  CHECK_THROWS_AS(read_dataset_csv(bad_x, Study::Experimental), ValidationError);
}

TEST_CASE("non-binary treatment entries are a data-shape problem") {
  const std::string path = write_text("badarm.csv", "x1,y,a\n0.5,1.0,0\n0.7,2.0,3\n");
  CHECK_THROWS_AS(read_dataset_csv(path, Study::Experimental), DataShapeError);
}

TEST_CASE("covariate-only files reject stray outcome columns") {
  const std::string path = write_text("grid.csv", "x1,x2\n0.0,1.0\n0.5,-1.0\n");
  const Eigen::MatrixXd X = read_covariates_csv(path);
  REQUIRE(X.rows() == 2);
  REQUIRE(X.cols() == 2);
  CHECK(X(1, 1) == doctest::Approx(-1.0));

  CHECK_THROWS_AS(read_covariates_csv("/nonexistent/path/file.csv"), ValidationError);
}

TEST_CASE("empty csv cells are malformed values") {
  const std::string path = write_text("empty_cell.csv", "x1,y,a\n0.5,,0\n");
  CHECK_THROWS_AS(read_dataset_csv(path, Study::Experimental), ValidationError);
}
