#include "faultcast/select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "faultcast/error.hpp"
#include "faultcast/stats.hpp"

namespace faultcast::learn {

namespace {

/// Indices 0..d-1 ordered so that key[rank 0] is best; equal keys keep the
/// lower index first.
std::vector<int> order_desc(const std::vector<double>& key) {
  std::vector<int> idx(key.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return key[a] > key[b]; });
  return idx;
}

std::vector<int> order_asc(const std::vector<double>& key) {
  std::vector<int> idx(key.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return key[a] < key[b]; });
  return idx;
}

std::vector<int> bin_column(std::span<const double> v, int bins) {
  auto [mn_it, mx_it] = std::minmax_element(v.begin(), v.end());
  double mn = *mn_it, mx = *mx_it;
  std::vector<int> out(v.size(), 0);
  if (mx <= mn) return out;  // constant column: a single bin
  double scale = static_cast<double>(bins) / (mx - mn);
  for (size_t i = 0; i < v.size(); ++i) {
    int b = static_cast<int>((v[i] - mn) * scale);
    out[i] = std::min(b, bins - 1);
  }
  return out;
}

}  // namespace

double binned_mutual_information(std::span<const double> a, std::span<const double> b, int bins) {
  size_t n = a.size();
  std::vector<int> ba = bin_column(a, bins), bb = bin_column(b, bins);
  std::vector<double> pa(bins, 0.0), pb(bins, 0.0);
  std::vector<double> joint(static_cast<size_t>(bins) * bins, 0.0);
  double w = 1.0 / static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) {
    pa[ba[i]] += w;
    pb[bb[i]] += w;
    joint[static_cast<size_t>(ba[i]) * bins + bb[i]] += w;
  }
  double mi = 0.0;
  for (int i = 0; i < bins; ++i)
    for (int j = 0; j < bins; ++j) {
      double pij = joint[static_cast<size_t>(i) * bins + j];
      if (pij > 0.0) mi += pij * std::log(pij / (pa[i] * pb[j]));
    }
  return mi < 0.0 ? 0.0 : mi;
}

FeatureRanking rank_features(const Matrix& x, const std::vector<double>& y, int bins) {
  size_t n = x.rows, d = x.cols;
  if (n < 3) throw UsageError("feature ranking needs at least 3 rows");
  if (y.size() != n) throw UsageError("feature and target row counts differ");
  if (bins <= 0) bins = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));

  double ymean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double syy = 0.0;
  for (double v : y) syy += (v - ymean) * (v - ymean);

  std::vector<double> variance(d, 0.0), pvalue(d, 1.0), mi(d, 0.0);
  std::vector<double> col(n);
  for (size_t f = 0; f < d; ++f) {
    for (size_t r = 0; r < n; ++r) col[r] = x.at(r, f);
    double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (size_t r = 0; r < n; ++r) {
      sxx += (col[r] - mean) * (col[r] - mean);
      sxy += (col[r] - mean) * (y[r] - ymean);
    }
    variance[f] = sxx / static_cast<double>(n - 1);

    // Pearson correlation t-test; a constant column has no correlation and
    // gets the least significant p-value.
    double denom = sxx * syy;
    if (denom > 0.0) {
      double r2 = (sxy * sxy) / denom;
      if (r2 >= 1.0) {
        pvalue[f] = 0.0;
      } else {
        double df = static_cast<double>(n - 2);
        double t2 = r2 * df / (1.0 - r2);
        pvalue[f] = student_t_two_sided_pvalue(std::sqrt(t2), df);
      }
    }
    mi[f] = binned_mutual_information(col, y, bins);
  }

  FeatureRanking rank;
  rank.variance = order_desc(variance);
  rank.p_value = order_asc(pvalue);
  rank.mutual_information = order_desc(mi);

  rank.score.assign(d, 0);
  for (size_t pos = 0; pos < d; ++pos) {
    rank.score[rank.variance[pos]] += static_cast<int>(pos) + 1;
    rank.score[rank.p_value[pos]] += static_cast<int>(pos) + 1;
    rank.score[rank.mutual_information[pos]] += static_cast<int>(pos) + 1;
  }
  rank.global.resize(d);
  std::iota(rank.global.begin(), rank.global.end(), 0);
  std::stable_sort(rank.global.begin(), rank.global.end(),
                   [&](int a, int b) { return rank.score[a] < rank.score[b]; });
  return rank;
}

TopKResult top_k_sweep(const Matrix& x, const std::vector<double>& y, const ModelSpec& spec,
                       const FeatureRanking& ranking, int k_cv, uint64_t seed) {
  int d = static_cast<int>(x.cols);
  if (d < 2) throw UsageError("top-k sweep needs at least 2 features");
  if (ranking.global.size() != x.cols) throw UsageError("ranking width mismatch");

  TopKResult res;
  for (int k = 2; k <= d; ++k) {
    std::vector<int> cols(ranking.global.begin(), ranking.global.begin() + k);
    double mean = kfold_cv(x.gather_cols(cols), y, spec, k_cv, seed).mean;
    res.curve.push_back(mean);
    if (res.best_k == 0 || mean > res.curve[res.best_k - 2]) res.best_k = k;
  }
  res.selected.assign(ranking.global.begin(), ranking.global.begin() + res.best_k);
  return res;
}

}  // namespace faultcast::learn
