// Prediction-accuracy metric, k-fold cross-validation, and hyperparameter
// grid search.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "faultcast/models.hpp"

namespace faultcast::learn {

/// 1 - |p - o| / o. Undefined at o = 0 (nullopt); those rows are excluded
/// from every aggregate. May be negative.
std::optional<double> prediction_accuracy(double predicted, double observed);

/// fold_of[row] in [0, k); seeded Fisher-Yates shuffle, the first n % k
/// folds take one extra row.
std::vector<int> make_folds(size_t n, int k, uint64_t seed);

struct CvResult {
  double mean = 0.0;
  double variance = 0.0;              // population variance across fold means
  std::vector<double> fold_means;     // one entry per fold that scored any row
};

/// Trains on k-1 folds, scores the held-out fold with clamped predictions
/// and the accuracy metric, and aggregates fold means. Rows with target 0
/// are skipped; a fold with no scorable row contributes no fold mean.
/// Throws UsageError when rows < k.
CvResult kfold_cv(const Matrix& x, const std::vector<double>& y, const ModelSpec& spec, int k,
                  uint64_t seed);

struct GridSearchResult {
  ModelSpec best;
  double best_mean = 0.0;
  size_t evaluated = 0;
};

/// Exhaustive Cartesian sweep in lexicographic order of parameter name and
/// listed value order; every point is scored by kfold_cv with the same seed
/// (hence identical folds). Strictly better mean wins, so ties keep the
/// first point.
GridSearchResult grid_search(ModelKind kind, const std::map<std::string, std::vector<double>>& grid,
                             const Matrix& x, const std::vector<double>& y, int k_cv,
                             uint64_t seed);

/// The default per-kind search grids.
std::map<std::string, std::vector<double>> default_grid(ModelKind kind);

}  // namespace faultcast::learn
