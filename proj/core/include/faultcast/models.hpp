// Hand-rolled regression models (ridge, knn, CART tree, random forest,
// gradient-boosted trees), the trained-predictor artifact, and its
// versioned persistence format.
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "faultcast/dataset.hpp"
#include "faultcast/whiten.hpp"

namespace faultcast::learn {

enum class ModelKind { Ridge, Knn, Tree, Forest, Gbrt };

const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& name);

/// Kind plus a closed hyperparameter map:
///   ridge:  lambda
///   knn:    k
///   tree:   max_depth, min_leaf
///   forest: n_trees, max_depth, feature_subsample
///   gbrt:   n_stages, learning_rate, max_depth
struct ModelSpec {
  ModelKind kind = ModelKind::Gbrt;
  std::map<std::string, double> params;

  static ModelSpec defaults(ModelKind kind);
  double param(const std::string& name) const;
  int iparam(const std::string& name) const;
};

/// Throws UsageError on unknown names, missing names, or out-of-range
/// values.
void validate_spec(const ModelSpec& spec);

struct TreeNode {
  int feature = -1;  // -1: leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  double predict(std::span<const double> x) const;
};

/// Exact greedy CART on squared error; splits use per-node sorted columns
/// with prefix sums. `rows` may repeat indices (bootstrap); `features`
/// limits candidate split features. Deterministic: ties prefer the lower
/// feature index, then the lower threshold.
RegressionTree build_tree(const Matrix& x, const std::vector<double>& y,
                          std::span<const uint32_t> rows, std::span<const int> features,
                          int max_depth, int min_leaf);

struct RidgeModel {
  std::vector<double> feature_mean;
  std::vector<double> coef;
  double intercept = 0.0;
};

struct KnnModel {
  Matrix x;
  std::vector<double> y;
  int k = 5;
};

struct TreeModel {
  RegressionTree tree;
};

struct ForestModel {
  std::vector<RegressionTree> trees;
};

struct GbrtModel {
  double base = 0.0;
  double learning_rate = 0.1;
  std::vector<RegressionTree> trees;
};

struct Model {
  ModelKind kind = ModelKind::Gbrt;
  std::variant<RidgeModel, KnnModel, TreeModel, ForestModel, GbrtModel> state;

  double predict_raw(std::span<const double> x) const;
};

/// Fits one model on the given columns as-is (no whitening, no selection).
/// Deterministic for a fixed seed. Ridge with lambda=0 on a singular system
/// throws UsageError.
Model fit_model(const ModelSpec& spec, const Matrix& x, const std::vector<double>& y,
                uint64_t seed);

/// Bootstrap-bagged ensemble over the given columns; member b resamples n
/// rows and fits with an RNG stream derived from (seed, b).
std::vector<Model> ensemble_fit(const ModelSpec& spec, const Matrix& x,
                                const std::vector<double>& y, int members, uint64_t seed);

/// The deployable artifact: whiten, select components, average the ensemble,
/// clamp to [0,1].
struct TrainedPredictor {
  Whitener whitener;
  std::vector<int> selected;  // whitened component indices fed to the models
  std::vector<Model> ensemble;
  ModelSpec spec;

  double predict(std::span<const double> x) const;
};

/// Spec op shape: whitens the dataset, keeps all components, fits a single
/// model.
TrainedPredictor train(const ModelSpec& spec, const Dataset& data, Target target, uint64_t seed);

/// Spec op shape: whitens the dataset, keeps all components, fits a bagged
/// ensemble of `members` models.
TrainedPredictor bagging_train(const ModelSpec& spec, const Dataset& data, Target target,
                               int members, uint64_t seed);

/// Versioned self-describing JSON document; byte-stable for equal inputs.
std::string serialize_predictor(const TrainedPredictor& pred);
TrainedPredictor parse_predictor(const std::string& text);

}  // namespace faultcast::learn
