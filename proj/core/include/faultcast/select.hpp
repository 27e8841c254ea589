// Feature ranking by variance, correlation p-value, and mutual information,
// combined by rank-sum voting, plus the top-k accuracy sweep.
#pragma once

#include <cstdint>
#include <vector>

#include "faultcast/cv.hpp"
#include "faultcast/dataset.hpp"

namespace faultcast::learn {

/// Each per-method list is a permutation of feature indices, best first.
/// score[f] is the 1-based rank-position sum of feature f across the three
/// methods ("voting score", smaller is better); global sorts features by
/// ascending score, ties to the lower index.
struct FeatureRanking {
  std::vector<int> variance;
  std::vector<int> p_value;
  std::vector<int> mutual_information;
  std::vector<int> global;
  std::vector<int> score;
};

/// Variance ranks by descending sample variance; p-value ranks by ascending
/// two-sided Pearson-correlation p-value (t statistic, n-2 df); mutual
/// information ranks by descending plug-in MI over equal-width bins
/// (ceil(sqrt(n)) bins per axis by default). Ties in every ranking go to
/// the lower feature index. Throws UsageError on fewer than 3 rows.
FeatureRanking rank_features(const Matrix& x, const std::vector<double>& y, int bins = 0);

/// Plug-in mutual information between two columns under equal-width binning.
double binned_mutual_information(std::span<const double> a, std::span<const double> b, int bins);

struct TopKResult {
  int best_k = 0;
  std::vector<int> selected;   // global-ranked indices, best_k of them
  std::vector<double> curve;   // mean CV accuracy for k = 2..d
};

/// Evaluates kfold_cv on the top-k global-ranked columns for every
/// k in [2, d]; the best mean wins and ties go to the smaller k.
TopKResult top_k_sweep(const Matrix& x, const std::vector<double>& y, const ModelSpec& spec,
                       const FeatureRanking& ranking, int k_cv, uint64_t seed);

}  // namespace faultcast::learn
