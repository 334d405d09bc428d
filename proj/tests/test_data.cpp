#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "passnet/data.hpp"
#include "passnet/errors.hpp"

using namespace passnet;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("load_csv") {
  SUBCASE("plain numeric file") {
    const std::string path = write_temp("passnet_csv_plain.csv",
                                        "a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
    const Dataset ds = load_csv(path, "y");
    CHECK(ds.size() == 3);
    CHECK(ds.features.cols == 2);
    CHECK(ds.targets == Vector{3, 6, 9});
    CHECK(ds.feature_names == std::vector<std::string>{"a", "b"});
    std::filesystem::remove(path);
  }
  SUBCASE("columns with missing values are dropped") {
    const std::string path = write_temp("passnet_csv_missing.csv",
                                        "a,b,c,y\n1,,3,0.5\n4,5,6,0.6\n7,NA,9,0.7\n");
    const Dataset ds = load_csv(path, "y");
    CHECK(ds.features.cols == 2);  // b dropped
    CHECK(ds.feature_names == std::vector<std::string>{"a", "c"});
    CHECK(ds.size() == 3);
    std::filesystem::remove(path);
  }
  SUBCASE("non-numeric target names the row") {
    const std::string path = write_temp("passnet_csv_badtarget.csv",
                                        "a,y\n1,2\n3,oops\n");
    CHECK_THROWS_WITH_AS(load_csv(path, "y"), doctest::Contains("row 2"), ParseError);
    std::filesystem::remove(path);
  }
  SUBCASE("missing target column") {
    const std::string path = write_temp("passnet_csv_notarget.csv", "a,b\n1,2\n");
    CHECK_THROWS_AS(load_csv(path, "y"), ParseError);
    std::filesystem::remove(path);
  }
  SUBCASE("unparseable feature cell in a retained column") {
    const std::string path = write_temp("passnet_csv_badcell.csv",
                                        "a,y\n1,2\nxyz,3\n");
    CHECK_THROWS_WITH_AS(load_csv(path, "y"), doctest::Contains("\"a\""), ParseError);
    std::filesystem::remove(path);
  }
}

TEST_CASE("split") {
  Dataset ds;
  ds.features = Matrix(10, 2);
  ds.targets.resize(10);
  for (std::size_t i = 0; i < 10; ++i) {
    ds.features(i, 0) = static_cast<double>(i);
    ds.features(i, 1) = 0.0;
    ds.targets[i] = static_cast<double>(i);
  }
  ds.feature_names = {"a", "b"};

  SUBCASE("60/20/20 of 10 rows is 6/2/2, disjoint and covering") {
    const DataSplits s = split(ds, {}, 5);
    CHECK(s.train.size() == 6);
    CHECK(s.validation.size() == 2);
    CHECK(s.test.size() == 2);
    std::vector<double> seen;
    for (const Dataset* part : {&s.train, &s.validation, &s.test}) {
      for (double t : part->targets) seen.push_back(t);
    }
    std::sort(seen.begin(), seen.end());
    for (std::size_t i = 0; i < 10; ++i) CHECK(seen[i] == static_cast<double>(i));
  }
  SUBCASE("same seed, same splits") {
    const DataSplits a = split(ds, {}, 5);
    const DataSplits b = split(ds, {}, 5);
    CHECK(a.train.targets == b.train.targets);
    CHECK(a.test.targets == b.test.targets);
  }
  SUBCASE("degenerate fractions are rejected") {
    CHECK_THROWS_AS(split(ds, {1.0, 0.0, 0.0}, 5), ConfigError);
    CHECK_THROWS_AS(split(ds, {0.5, 0.2, 0.2}, 5), ConfigError);  // does not sum to 1
  }
}

TEST_CASE("fit_preprocessor and apply") {
  SUBCASE("targets {2,4,6} scale to {0, 0.5, 1}") {
    Dataset ds;
    ds.features = Matrix(3, 2);
    ds.features.values = {1, 0, 0, 1, 1, 1};
    ds.targets = {2, 4, 6};
    ds.feature_names = {"a", "b"};
    const Preprocessor prep = fit_preprocessor(ds, 2);
    const Dataset out = apply_preprocessor(prep, ds);
    CHECK(out.targets == Vector{0.0, 0.5, 1.0});
    for (std::size_t r = 0; r < 3; ++r) {
      CHECK(inverse_target_scale(prep, out.targets[r]) == doctest::Approx(ds.targets[r]));
    }
  }
  SUBCASE("identity covariance: projection is a signed permutation") {
    // the four sign patterns have exactly diagonal covariance, so the
    // eigenbasis is the coordinate basis itself
    Dataset ds;
    ds.features = Matrix(4, 2);
    ds.features.values = {1, 1, 1, -1, -1, 1, -1, -1};
    ds.targets = {1, 2, 3, 4};
    ds.feature_names = {"a", "b"};
    const Preprocessor prep = fit_preprocessor(ds, 2);
    for (std::size_t comp = 0; comp < 2; ++comp) {
      std::size_t nonzero = 0;
      for (std::size_t i = 0; i < 2; ++i) {
        const double v = prep.pca.components(comp, i);
        if (std::abs(v) > 1e-12) {
          ++nonzero;
          CHECK(std::abs(v) == doctest::Approx(1.0));
          CHECK(v > 0.0);  // sign convention: largest entry positive
        }
      }
      CHECK(nonzero == 1);
    }
    const Dataset out = apply_preprocessor(prep, ds);
    double cross = 0.0;
    for (std::size_t r = 0; r < 4; ++r) cross += out.features(r, 0) * out.features(r, 1);
    CHECK(std::abs(cross) <= 1e-12);
  }
  SUBCASE("data on a line y=x: first component is the diagonal direction") {
    Dataset ds;
    const std::size_t n = 40;
    ds.features = Matrix(n, 2);
    ds.targets.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / 4.0 - 5.0;
      ds.features(i, 0) = t;
      ds.features(i, 1) = t;
      ds.targets[i] = t;
    }
    ds.feature_names = {"a", "b"};
    const Preprocessor prep = fit_preprocessor(ds, 2);
    // after standardization both coordinates are identical, covariance is
    // all-ones: top eigenvector (1,1)/sqrt(2), second eigenvalue ~ 0
    CHECK(prep.pca.components(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-8));
    CHECK(prep.pca.components(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-8));

    const Dataset out = apply_preprocessor(prep, ds);
    double second_var = 0.0;
    for (std::size_t i = 0; i < n; ++i) second_var += out.features(i, 1) * out.features(i, 1);
    CHECK(second_var <= 1e-16 * static_cast<double>(n));
  }
  SUBCASE("projected training covariance is diagonal") {
    Dataset ds = synthetic_regression(300, 6, 17);
    // correlate the features to make PCA non-trivial
    for (std::size_t r = 0; r < ds.size(); ++r) {
      ds.features(r, 1) = 0.7 * ds.features(r, 0) + 0.3 * ds.features(r, 1);
      ds.features(r, 2) = -0.5 * ds.features(r, 0) + 0.2 * ds.features(r, 2);
    }
    const Preprocessor prep = fit_preprocessor(ds, 4);
    const Dataset out = apply_preprocessor(prep, ds);

    const std::size_t n = out.size();
    Vector mean(4, 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < 4; ++c) mean[c] += out.features(r, c);
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = i + 1; j < 4; ++j) {
        double cov = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          cov += (out.features(r, i) - mean[i]) * (out.features(r, j) - mean[j]);
        }
        cov /= static_cast<double>(n - 1);
        CHECK(std::abs(cov) <= 1e-8);
      }
    }
  }
  SUBCASE("zero-variance features are dropped, k is lowered when d < k") {
    Dataset ds;
    ds.features = Matrix(20, 3);
    ds.targets.resize(20);
    for (std::size_t i = 0; i < 20; ++i) {
      ds.features(i, 0) = static_cast<double>(i);
      ds.features(i, 1) = 5.0;  // constant column
      ds.features(i, 2) = static_cast<double>(i % 4);
      ds.targets[i] = static_cast<double>(i);
    }
    ds.feature_names = {"a", "const", "c"};
    const Preprocessor prep = fit_preprocessor(ds, 10);
    CHECK(prep.retained_columns == std::vector<std::size_t>{0, 2});
    CHECK(prep.pca.components.rows == 2);
  }
  SUBCASE("apply clips scaled targets to the guard band on unseen data") {
    Dataset train;
    train.features = Matrix(3, 1);
    train.features.values = {0, 1, 2};
    train.targets = {0.0, 1.0, 2.0};
    train.feature_names = {"a"};
    const Preprocessor prep = fit_preprocessor(train, 1);
    Dataset wild = train;
    wild.targets = {-10.0, 1.0, 20.0};
    const Dataset out = apply_preprocessor(prep, wild);
    CHECK(out.targets[0] == -0.5);
    CHECK(out.targets[2] == 1.5);
  }
  SUBCASE("preprocessing is fit on train statistics only") {
    Dataset ds = synthetic_regression(200, 4, 3);
    const DataSplits s = split(ds, {}, 3);
    const Preprocessor prep = fit_preprocessor(s.train, 4);
    // shifting the test set must not change the fitted state
    Dataset shifted_test = s.test;
    for (double& v : shifted_test.features.values) v += 100.0;
    const Preprocessor again = fit_preprocessor(s.train, 4);
    CHECK(prep.feature_means == again.feature_means);
    CHECK(prep.feature_stds == again.feature_stds);
    CHECK(prep.pca.components.values == again.pca.components.values);
    CHECK(prep.target_min == again.target_min);
  }
}

TEST_CASE("synthetic_regression") {
  SUBCASE("deterministic under a fixed seed") {
    const Dataset a = synthetic_regression(60, 5, 99);
    const Dataset b = synthetic_regression(60, 5, 99);
    CHECK(a.features.values == b.features.values);
    CHECK(a.targets == b.targets);
  }
  SUBCASE("targets live in [0,1]") {
    const Dataset ds = synthetic_regression(500, 8, 1);
    for (double t : ds.targets) {
      CHECK(t >= 0.0);
      CHECK(t <= 1.0);
    }
  }
  SUBCASE("zero noise makes the target a function of the features") {
    const Dataset a = synthetic_regression(60, 3, 7, 0.0);
    const Dataset b = synthetic_regression(60, 3, 7, 0.0);
    CHECK(a.targets == b.targets);
    // noiseless targets are strictly inside (0,1): a sigmoid output
    for (double t : a.targets) {
      CHECK(t > 0.0);
      CHECK(t < 1.0);
    }
  }
  SUBCASE("minimum size is enforced") {
    CHECK_THROWS_AS(synthetic_regression(10, 3, 1), std::invalid_argument);
  }
}
