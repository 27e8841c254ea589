#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "faultcast/error.hpp"
#include "faultcast/models.hpp"
#include "faultcast/rng.hpp"

using namespace faultcast;
using namespace faultcast::learn;

namespace {

Dataset synthetic(size_t n, uint64_t seed) {
  SplitMix64 rng(seed);
  Dataset d;
  d.x = Matrix(n, 4);
  for (size_t r = 0; r < n; ++r) {
    d.ids.push_back("k" + std::to_string(r));
    for (size_t c = 0; c < 4; ++c) d.x.at(r, c) = rng.unit();
    double s = 0.2 + 0.6 * d.x.at(r, 0) + 0.1 * d.x.at(r, 2);
    d.success.push_back(std::min(1.0, s));
    d.interruption.push_back(0.5 - 0.4 * d.x.at(r, 1));
  }
  return d;
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("model kind names roundtrip and reject unknowns") {
  for (ModelKind k : {ModelKind::Ridge, ModelKind::Knn, ModelKind::Tree, ModelKind::Forest,
                      ModelKind::Gbrt})
    CHECK(model_kind_from_name(model_kind_name(k)) == k);
  CHECK_THROWS_AS(model_kind_from_name("svm"), UsageError);
}

TEST_CASE("spec validation enforces the closed parameter maps") {
  for (ModelKind k : {ModelKind::Ridge, ModelKind::Knn, ModelKind::Tree, ModelKind::Forest,
                      ModelKind::Gbrt})
    CHECK_NOTHROW(validate_spec(ModelSpec::defaults(k)));

  ModelSpec bad_name = ModelSpec::defaults(ModelKind::Ridge);
  bad_name.params["gamma"] = 1.0;
  CHECK_THROWS_AS(validate_spec(bad_name), UsageError);

  ModelSpec missing = ModelSpec::defaults(ModelKind::Knn);
  missing.params.erase("k");
  CHECK_THROWS_AS(validate_spec(missing), UsageError);

  ModelSpec zero_k = ModelSpec::defaults(ModelKind::Knn);
  zero_k.params["k"] = 0.0;
  CHECK_THROWS_AS(validate_spec(zero_k), UsageError);

  ModelSpec sub = ModelSpec::defaults(ModelKind::Forest);
  sub.params["feature_subsample"] = 1.5;
  CHECK_THROWS_AS(validate_spec(sub), UsageError);

  ModelSpec rate = ModelSpec::defaults(ModelKind::Gbrt);
  rate.params["learning_rate"] = 0.0;
  CHECK_THROWS_AS(validate_spec(rate), UsageError);
}

TEST_CASE("forest defaults match the documented values") {
  ModelSpec f = ModelSpec::defaults(ModelKind::Forest);
  CHECK(f.iparam("n_trees") == 100);
  CHECK(f.iparam("max_depth") == 6);
  CHECK(f.param("feature_subsample") == 0.5);
}

TEST_CASE("ridge recovers an exact linear relation") {
  Matrix x(8, 2);
  std::vector<double> y;
  SplitMix64 rng(5);
  for (size_t r = 0; r < 8; ++r) {
    x.at(r, 0) = rng.unit();
    x.at(r, 1) = rng.unit();
    y.push_back(3.0 * x.at(r, 0) - 2.0 * x.at(r, 1) + 1.0);
  }
  ModelSpec spec{ModelKind::Ridge, {{"lambda", 0.0}}};
  Model m = fit_model(spec, x, y, 1);
  const auto& ridge = std::get<RidgeModel>(m.state);
  CHECK(ridge.coef[0] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(ridge.coef[1] == doctest::Approx(-2.0).epsilon(1e-9));
  std::array<double, 2> probe{0.25, 0.75};
  CHECK(m.predict_raw(probe) == doctest::Approx(3.0 * 0.25 - 2.0 * 0.75 + 1.0).epsilon(1e-9));
}

TEST_CASE("ridge with zero lambda rejects singular systems") {
  Matrix x(6, 2);
  std::vector<double> y(6, 1.0);
  for (size_t r = 0; r < 6; ++r) {
    x.at(r, 0) = static_cast<double>(r);
    x.at(r, 1) = 2.0 * static_cast<double>(r);  // exact collinearity
  }
  ModelSpec spec{ModelKind::Ridge, {{"lambda", 0.0}}};
  CHECK_THROWS_AS(fit_model(spec, x, y, 1), UsageError);

  // a positive lambda regularizes it into solvability
  spec.params["lambda"] = 1e-3;
  CHECK_NOTHROW(fit_model(spec, x, y, 1));
}

TEST_CASE("knn with k=1 memorizes and k=n averages") {
  Matrix x(4, 1);
  std::vector<double> y{0.1, 0.4, 0.6, 0.9};
  for (size_t r = 0; r < 4; ++r) x.at(r, 0) = static_cast<double>(r);

  Model near = fit_model({ModelKind::Knn, {{"k", 1}}}, x, y, 1);
  for (size_t r = 0; r < 4; ++r) {
    std::array<double, 1> p{static_cast<double>(r) + 0.1};
    CHECK(near.predict_raw(p) == y[r]);
  }

  Model all = fit_model({ModelKind::Knn, {{"k", 4}}}, x, y, 1);
  std::array<double, 1> p{1.3};
  CHECK(all.predict_raw(p) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("a depth-one tree recovers a step function") {
  Matrix x(10, 1);
  std::vector<double> y;
  for (size_t r = 0; r < 10; ++r) {
    x.at(r, 0) = static_cast<double>(r) / 10.0;
    y.push_back(x.at(r, 0) < 0.5 ? 0.0 : 1.0);
  }
  std::vector<uint32_t> rows(10);
  for (uint32_t r = 0; r < 10; ++r) rows[r] = r;
  std::vector<int> feats{0};
  RegressionTree t = build_tree(x, y, rows, feats, 1, 1);
  std::array<double, 1> lo{0.2}, hi{0.8};
  CHECK(t.predict(lo) == 0.0);
  CHECK(t.predict(hi) == 1.0);
  REQUIRE(t.nodes.size() == 3);
  CHECK(t.nodes[0].feature == 0);
  CHECK(t.nodes[0].threshold > 0.4);
  CHECK(t.nodes[0].threshold <= 0.5);
}

TEST_CASE("min_leaf at the row count forces a single mean leaf") {
  Matrix x(6, 1);
  std::vector<double> y{0, 1, 2, 3, 4, 5};
  for (size_t r = 0; r < 6; ++r) x.at(r, 0) = static_cast<double>(r);
  std::vector<uint32_t> rows{0, 1, 2, 3, 4, 5};
  std::vector<int> feats{0};
  RegressionTree t = build_tree(x, y, rows, feats, 4, 6);
  REQUIRE(t.nodes.size() == 1);
  CHECK(t.nodes[0].is_leaf());
  CHECK(t.nodes[0].value == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("gbrt drives training error to near zero on a line") {
  Matrix x(10, 1);
  std::vector<double> y;
  for (size_t r = 0; r < 10; ++r) {
    x.at(r, 0) = static_cast<double>(r) / 10.0;
    y.push_back(2.0 * x.at(r, 0));
  }
  ModelSpec spec{ModelKind::Gbrt,
                 {{"n_stages", 200}, {"learning_rate", 0.1}, {"max_depth", 1}}};
  Model m = fit_model(spec, x, y, 7);
  double mse = 0.0;
  for (size_t r = 0; r < 10; ++r) {
    double e = m.predict_raw(x.row(r)) - y[r];
    mse += e * e / 10.0;
  }
  CHECK(mse < 1e-3);
  CHECK(std::get<GbrtModel>(m.state).trees.size() == 200);
}

TEST_CASE("trained predictor clamps into the unit interval") {
  TrainedPredictor p;
  p.whitener = Whitener::identity(1);
  p.selected = {0};
  p.spec = ModelSpec::defaults(ModelKind::Ridge);
  Model m;
  m.kind = ModelKind::Ridge;
  m.state = RidgeModel{{0.0}, {0.0}, 5.0};
  p.ensemble = {m};
  std::array<double, 1> x{0.3};
  CHECK(p.predict(x) == 1.0);

  std::get<RidgeModel>(p.ensemble[0].state).intercept = -5.0;
  CHECK(p.predict(x) == 0.0);
}

TEST_CASE("predictor averages its ensemble members") {
  TrainedPredictor p;
  p.whitener = Whitener::identity(1);
  p.selected = {0};
  p.spec = ModelSpec::defaults(ModelKind::Ridge);
  Model a, b;
  a.kind = b.kind = ModelKind::Ridge;
  a.state = RidgeModel{{0.0}, {0.0}, 0.2};
  b.state = RidgeModel{{0.0}, {0.0}, 0.6};
  p.ensemble = {a, b};
  std::array<double, 1> x{0.0};
  CHECK(p.predict(x) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("predictor serialization roundtrips for every model kind") {
  Dataset d = synthetic(24, 99);
  SplitMix64 probe_rng(123);
  for (ModelKind k : {ModelKind::Ridge, ModelKind::Knn, ModelKind::Tree, ModelKind::Forest,
                      ModelKind::Gbrt}) {
    ModelSpec spec = ModelSpec::defaults(k);
    if (k == ModelKind::Forest) spec.params["n_trees"] = 10;
    if (k == ModelKind::Gbrt) spec.params["n_stages"] = 20;
    TrainedPredictor p = train(spec, d, Target::Success, 42);
    std::string text = serialize_predictor(p);
    TrainedPredictor back = parse_predictor(text);
    CHECK(serialize_predictor(back) == text);  // byte-stable fixed point
    for (int i = 0; i < 10; ++i) {
      std::array<double, 4> x{probe_rng.unit(), probe_rng.unit(), probe_rng.unit(),
                              probe_rng.unit()};
      CHECK(back.predict(x) == p.predict(x));
    }
  }
}

TEST_CASE("parse_predictor rejects garbage") {
  CHECK_THROWS_AS(parse_predictor(""), DataError);
  CHECK_THROWS_AS(parse_predictor("{}"), DataError);
  CHECK_THROWS_AS(parse_predictor("not a predictor"), DataError);
  CHECK_THROWS_AS(parse_predictor("resilience-predictor 999"), DataError);  // future version
  CHECK_THROWS_AS(parse_predictor("resilience-predictor 1\nspec gbrt 0\n"), DataError);  // truncated
  SUBCASE("trailing content is rejected") {
    Dataset d = synthetic(12, 5);
    std::string text = serialize_predictor(train(ModelSpec::defaults(ModelKind::Ridge), d,
                                                 Target::Success, 1));
    CHECK_THROWS_AS(parse_predictor(text + "extra"), DataError);
  }
}

TEST_CASE("ensemble fitting is seed-deterministic") {
  Dataset d = synthetic(30, 7);
  ModelSpec spec = ModelSpec::defaults(ModelKind::Tree);
  std::vector<Model> e1 = ensemble_fit(spec, d.x, d.success, 5, 11);
  std::vector<Model> e2 = ensemble_fit(spec, d.x, d.success, 5, 11);
  std::vector<Model> e3 = ensemble_fit(spec, d.x, d.success, 5, 12);
  REQUIRE(e1.size() == 5);

  SplitMix64 probe_rng(3);
  bool seed_changed_something = false;
  for (int i = 0; i < 20; ++i) {
    std::array<double, 4> x{probe_rng.unit(), probe_rng.unit(), probe_rng.unit(),
                            probe_rng.unit()};
    for (size_t b = 0; b < 5; ++b) {
      CHECK(e1[b].predict_raw(x) == e2[b].predict_raw(x));
      if (e1[b].predict_raw(x) != e3[b].predict_raw(x)) seed_changed_something = true;
    }
  }
  CHECK(seed_changed_something);
}

TEST_CASE("bagging_train produces the requested member count") {
  Dataset d = synthetic(20, 55);
  ModelSpec spec = ModelSpec::defaults(ModelKind::Tree);
  TrainedPredictor p = bagging_train(spec, d, Target::Interruption, 7, 1);
  CHECK(p.ensemble.size() == 7);
  CHECK(p.selected.size() == d.x.cols);
  std::array<double, 4> x{0.5, 0.5, 0.5, 0.5};
  double v = p.predict(x);
  CHECK(v >= 0.0);
  CHECK(v <= 1.0);
}

TEST_CASE("fitting rejects empty or mismatched inputs") {
  Matrix x(3, 2);
  std::vector<double> y{1.0, 2.0};
  CHECK_THROWS_AS(fit_model(ModelSpec::defaults(ModelKind::Tree), x, y, 1), UsageError);
  CHECK_THROWS_AS(fit_model(ModelSpec::defaults(ModelKind::Tree), Matrix(0, 2), {}, 1),
                  UsageError);
}

}  // TEST_SUITE
