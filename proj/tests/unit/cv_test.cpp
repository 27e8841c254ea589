#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "faultcast/cv.hpp"
#include "faultcast/error.hpp"
#include "faultcast/rng.hpp"

using namespace faultcast;
using namespace faultcast::learn;

TEST_SUITE("cv") {

TEST_CASE("prediction accuracy matches the published example") {
  auto a = prediction_accuracy(0.701, 0.653);
  REQUIRE(a.has_value());
  CHECK(*a == doctest::Approx(0.9264931).epsilon(1e-6));
  CHECK(std::abs(*a - 0.926) < 0.001);
}

TEST_CASE("perfect predictions score exactly one") {
  SplitMix64 rng(1);
  for (int i = 0; i < 100; ++i) {
    double p = rng.unit() + 1e-9;
    auto a = prediction_accuracy(p, p);
    REQUIRE(a.has_value());
    CHECK(*a == 1.0);
  }
}

TEST_CASE("zero observations are undefined, large misses go negative") {
  CHECK_FALSE(prediction_accuracy(0.5, 0.0).has_value());
  auto neg = prediction_accuracy(1.0, 0.1);
  REQUIRE(neg.has_value());
  CHECK(*neg == doctest::Approx(-8.0).epsilon(1e-12));
}

TEST_CASE("folds partition rows with the first folds one larger") {
  auto f = make_folds(10, 3, 42);
  REQUIRE(f.size() == 10);
  std::vector<int> counts(3, 0);
  for (int fold : f) {
    REQUIRE(fold >= 0);
    REQUIRE(fold < 3);
    ++counts[fold];
  }
  CHECK(counts[0] == 4);
  CHECK(counts[1] == 3);
  CHECK(counts[2] == 3);

  CHECK(make_folds(10, 3, 42) == f);        // same seed, same folds
  CHECK(make_folds(10, 3, 43) != f);        // new seed reshuffles
  auto exact = make_folds(6, 3, 9);
  std::vector<int> even(3, 0);
  for (int fold : exact) ++even[fold];
  CHECK(even == std::vector<int>{2, 2, 2});
}

TEST_CASE("cross-validation scores a learnable relation highly") {
  SplitMix64 rng(10);
  Matrix x(30, 2);
  std::vector<double> y;
  for (size_t r = 0; r < 30; ++r) {
    x.at(r, 0) = rng.unit();
    x.at(r, 1) = rng.unit();
    y.push_back(0.3 + 0.5 * x.at(r, 0));
  }
  CvResult res = kfold_cv(x, y, {ModelKind::Ridge, {{"lambda", 1e-6}}}, 5, 1);
  CHECK(res.fold_means.size() == 5);
  CHECK(res.mean > 0.99);
  CHECK(res.variance >= 0.0);
  double s = 0.0;
  for (double m : res.fold_means) s += m / res.fold_means.size();
  CHECK(res.mean == doctest::Approx(s).epsilon(1e-12));
}

TEST_CASE("rows with zero targets are excluded from scoring") {
  Matrix x(8, 1);
  std::vector<double> y;
  for (size_t r = 0; r < 8; ++r) {
    x.at(r, 0) = static_cast<double>(r);
    y.push_back(r % 2 == 0 ? 0.0 : 0.5);
  }
  // knn k=1 on alternating zeros: only the 0.5 rows are ever scored
  CvResult res = kfold_cv(x, y, {ModelKind::Knn, {{"k", 1}}}, 4, 3);
  for (double m : res.fold_means) CHECK(std::isfinite(m));

  std::vector<double> zeros(8, 0.0);
  CvResult none = kfold_cv(x, zeros, {ModelKind::Knn, {{"k", 1}}}, 4, 3);
  CHECK(none.fold_means.empty());
  CHECK(none.mean == 0.0);
}

TEST_CASE("cross-validation refuses more folds than rows") {
  Matrix x(3, 1);
  std::vector<double> y{0.1, 0.2, 0.3};
  CHECK_THROWS_AS(kfold_cv(x, y, ModelSpec::defaults(ModelKind::Knn), 4, 1), UsageError);
  CHECK_THROWS_AS(kfold_cv(x, y, ModelSpec::defaults(ModelKind::Knn), 1, 1), UsageError);
}

TEST_CASE("grid search ties keep the first point in listed order") {
  // constant target: every knn model predicts 0.5 everywhere, all points tie
  SplitMix64 rng(2);
  Matrix x(12, 1);
  std::vector<double> y(12, 0.5);
  for (size_t r = 0; r < 12; ++r) x.at(r, 0) = rng.unit();

  std::map<std::string, std::vector<double>> grid{{"k", {3, 1, 5}}};
  GridSearchResult res = grid_search(ModelKind::Knn, grid, x, y, 3, 1);
  CHECK(res.evaluated == 3);
  CHECK(res.best_mean == 1.0);
  CHECK(res.best.iparam("k") == 3);  // first listed value wins the tie
}

TEST_CASE("grid search walks the full cartesian product") {
  SplitMix64 rng(6);
  Matrix x(15, 1);
  std::vector<double> y;
  for (size_t r = 0; r < 15; ++r) {
    x.at(r, 0) = rng.unit();
    y.push_back(0.2 + 0.3 * x.at(r, 0));
  }
  std::map<std::string, std::vector<double>> grid{{"max_depth", {1, 2, 3}},
                                                  {"min_leaf", {1, 2}}};
  GridSearchResult res = grid_search(ModelKind::Tree, grid, x, y, 3, 5);
  CHECK(res.evaluated == 6);
  CHECK_NOTHROW(validate_spec(res.best));
  CHECK(res.best_mean > 0.0);

  CHECK_THROWS_AS(grid_search(ModelKind::Tree, {}, x, y, 3, 5), UsageError);
  CHECK_THROWS_AS(grid_search(ModelKind::Tree, {{"max_depth", {}}}, x, y, 3, 5), UsageError);
}

TEST_CASE("default grids cover every model kind") {
  for (ModelKind k : {ModelKind::Ridge, ModelKind::Knn, ModelKind::Tree, ModelKind::Forest,
                      ModelKind::Gbrt}) {
    auto grid = default_grid(k);
    CHECK_FALSE(grid.empty());
    for (const auto& [name, values] : grid) {
      CHECK_FALSE(values.empty());
      ModelSpec spec = ModelSpec::defaults(k);
      for (double v : values) {
        spec.params[name] = v;
        CHECK_NOTHROW(validate_spec(spec));
      }
    }
  }
}

}  // TEST_SUITE
