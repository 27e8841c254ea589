#include "faultcast/cv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "faultcast/error.hpp"
#include "faultcast/rng.hpp"

namespace faultcast::learn {

std::optional<double> prediction_accuracy(double predicted, double observed) {
  if (observed == 0.0) return std::nullopt;
  return 1.0 - std::fabs(predicted - observed) / observed;
}

std::vector<int> make_folds(size_t n, int k, uint64_t seed) {
  std::vector<uint32_t> order(n);
  std::iota(order.begin(), order.end(), uint32_t{0});
  SplitMix64 rng(seed);
  for (size_t i = n; i-- > 1;) std::swap(order[i], order[rng.below(i + 1)]);

  std::vector<int> fold_of(n, 0);
  size_t base = n / static_cast<size_t>(k), rem = n % static_cast<size_t>(k), pos = 0;
  for (int f = 0; f < k; ++f) {
    size_t len = base + (static_cast<size_t>(f) < rem ? 1 : 0);
    for (size_t i = 0; i < len; ++i) fold_of[order[pos++]] = f;
  }
  return fold_of;
}

CvResult kfold_cv(const Matrix& x, const std::vector<double>& y, const ModelSpec& spec, int k,
                  uint64_t seed) {
  size_t n = x.rows;
  if (k < 2) throw UsageError("cross-validation needs k >= 2");
  if (n < static_cast<size_t>(k)) throw UsageError("fewer rows than folds");

  std::vector<int> fold_of = make_folds(n, k, seed);
  CvResult res;
  for (int f = 0; f < k; ++f) {
    std::vector<uint32_t> train_rows;
    std::vector<uint32_t> test_rows;
    for (size_t r = 0; r < n; ++r)
      (fold_of[r] == f ? test_rows : train_rows).push_back(static_cast<uint32_t>(r));

    std::vector<double> ytr(train_rows.size());
    for (size_t i = 0; i < train_rows.size(); ++i) ytr[i] = y[train_rows[i]];
    Model model = fit_model(spec, x.gather_rows(train_rows), ytr,
                            SplitMix64::derive(seed, static_cast<uint64_t>(f)).next());

    double sum = 0.0;
    size_t scored = 0;
    for (uint32_t r : test_rows) {
      double p = std::clamp(model.predict_raw(x.row(r)), 0.0, 1.0);
      if (auto acc = prediction_accuracy(p, y[r])) {
        sum += *acc;
        ++scored;
      }
    }
    if (scored > 0) res.fold_means.push_back(sum / static_cast<double>(scored));
  }

  if (!res.fold_means.empty()) {
    double s = std::accumulate(res.fold_means.begin(), res.fold_means.end(), 0.0);
    res.mean = s / static_cast<double>(res.fold_means.size());
    double v = 0.0;
    for (double m : res.fold_means) v += (m - res.mean) * (m - res.mean);
    res.variance = v / static_cast<double>(res.fold_means.size());
  }
  return res;
}

std::map<std::string, std::vector<double>> default_grid(ModelKind kind) {
  switch (kind) {
    case ModelKind::Ridge: return {{"lambda", {0.0, 0.01, 0.1, 1.0}}};
    case ModelKind::Knn: return {{"k", {1, 3, 5, 9}}};
    case ModelKind::Tree: return {{"max_depth", {2, 4, 6}}, {"min_leaf", {1, 3}}};
    case ModelKind::Forest: return {{"n_trees", {50, 200}}, {"max_depth", {4, 8}}};
    case ModelKind::Gbrt:
      return {{"n_stages", {50, 100, 200}}, {"learning_rate", {0.05, 0.1, 0.3}},
              {"max_depth", {2, 3}}};
  }
  return {};
}

GridSearchResult grid_search(ModelKind kind, const std::map<std::string, std::vector<double>>& grid,
                             const Matrix& x, const std::vector<double>& y, int k_cv,
                             uint64_t seed) {
  if (grid.empty()) throw UsageError("empty hyperparameter grid");
  for (const auto& [name, values] : grid)
    if (values.empty()) throw UsageError("empty value list for grid parameter '" + name + "'");

  ModelSpec base = ModelSpec::defaults(kind);
  std::vector<std::string> names;
  for (const auto& [name, values] : grid) names.push_back(name);

  GridSearchResult res;
  bool have_best = false;
  std::vector<size_t> idx(names.size(), 0);
  for (;;) {
    ModelSpec spec = base;
    for (size_t i = 0; i < names.size(); ++i) spec.params[names[i]] = grid.at(names[i])[idx[i]];
    validate_spec(spec);
    // A model falling back to unsearched defaults (e.g. knn on a trivial
    // grid) still trains: any grid point failing to fit is a usage error.
    double mean = kfold_cv(x, y, spec, k_cv, seed).mean;
    ++res.evaluated;
    if (!have_best || mean > res.best_mean) {
      have_best = true;
      res.best = spec;
      res.best_mean = mean;
    }

    // Odometer increment, last name fastest: earlier combinations come
    // first in lexicographic (name, listed value) order.
    size_t pos = names.size();
    while (pos-- > 0) {
      if (++idx[pos] < grid.at(names[pos]).size()) break;
      idx[pos] = 0;
      if (pos == 0) return res;
    }
  }
}

}  // namespace faultcast::learn
