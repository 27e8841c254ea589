#include "faultcast/models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <string_view>

#include "faultcast/error.hpp"
#include "faultcast/rng.hpp"

namespace faultcast::learn {

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::Ridge: return "ridge";
    case ModelKind::Knn: return "knn";
    case ModelKind::Tree: return "tree";
    case ModelKind::Forest: return "forest";
    case ModelKind::Gbrt: return "gbrt";
  }
  return "?";
}

ModelKind model_kind_from_name(const std::string& name) {
  for (ModelKind k : {ModelKind::Ridge, ModelKind::Knn, ModelKind::Tree, ModelKind::Forest,
                      ModelKind::Gbrt})
    if (name == model_kind_name(k)) return k;
  throw UsageError("unknown model kind '" + name + "'");
}

ModelSpec ModelSpec::defaults(ModelKind kind) {
  ModelSpec s;
  s.kind = kind;
  switch (kind) {
    case ModelKind::Ridge: s.params = {{"lambda", 0.1}}; break;
    case ModelKind::Knn: s.params = {{"k", 5}}; break;
    case ModelKind::Tree: s.params = {{"max_depth", 6}, {"min_leaf", 1}}; break;
    case ModelKind::Forest:
      s.params = {{"n_trees", 100}, {"max_depth", 6}, {"feature_subsample", 0.5}};
      break;
    case ModelKind::Gbrt:
      s.params = {{"n_stages", 100}, {"learning_rate", 0.1}, {"max_depth", 2}};
      break;
  }
  return s;
}

double ModelSpec::param(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end())
    throw UsageError(std::string(model_kind_name(kind)) + " is missing parameter '" + name + "'");
  return it->second;
}

int ModelSpec::iparam(const std::string& name) const {
  double v = param(name);
  return static_cast<int>(v);
}

namespace {

const std::map<std::string, double>& allowed_params(ModelKind kind) {
  static const auto ridge = std::map<std::string, double>{{"lambda", 0}};
  static const auto knn = std::map<std::string, double>{{"k", 1}};
  static const auto tree = std::map<std::string, double>{{"max_depth", 0}, {"min_leaf", 1}};
  static const auto forest = std::map<std::string, double>{
      {"n_trees", 1}, {"max_depth", 0}, {"feature_subsample", 0}};
  static const auto gbrt = std::map<std::string, double>{
      {"n_stages", 1}, {"learning_rate", 0}, {"max_depth", 0}};
  switch (kind) {
    case ModelKind::Ridge: return ridge;
    case ModelKind::Knn: return knn;
    case ModelKind::Tree: return tree;
    case ModelKind::Forest: return forest;
    case ModelKind::Gbrt: return gbrt;
  }
  return gbrt;
}

}  // namespace

void validate_spec(const ModelSpec& spec) {
  const auto& allowed = allowed_params(spec.kind);
  for (const auto& [name, value] : spec.params) {
    auto it = allowed.find(name);
    if (it == allowed.end())
      throw UsageError(std::string(model_kind_name(spec.kind)) + " has no parameter '" + name +
                       "'");
    if (value < it->second)
      throw UsageError("parameter '" + name + "' below its minimum");
  }
  for (const auto& [name, minimum] : allowed) {
    (void)minimum;
    if (!spec.params.count(name))
      throw UsageError(std::string(model_kind_name(spec.kind)) + " is missing parameter '" +
                       name + "'");
  }
  if (spec.kind == ModelKind::Forest) {
    double f = spec.param("feature_subsample");
    if (f <= 0.0 || f > 1.0) throw UsageError("feature_subsample must be in (0,1]");
  }
  if (spec.kind == ModelKind::Gbrt && spec.param("learning_rate") <= 0.0)
    throw UsageError("learning_rate must be positive");
}

double RegressionTree::predict(std::span<const double> x) const {
  int i = 0;
  while (!nodes[i].is_leaf())
    i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return nodes[i].value;
}

namespace {

struct TreeBuilder {
  const Matrix& x;
  const std::vector<double>& y;
  std::span<const int> features;
  int max_depth;
  int min_leaf;
  std::vector<TreeNode> nodes;

  int leaf(double value) {
    nodes.push_back({-1, 0.0, -1, -1, value});
    return static_cast<int>(nodes.size()) - 1;
  }

  int build(std::vector<uint32_t>& rows, int depth) {
    size_t m = rows.size();
    double sum = 0.0, sum2 = 0.0;
    for (uint32_t r : rows) {
      sum += y[r];
      sum2 += y[r] * y[r];
    }
    double mean = sum / static_cast<double>(m);
    double sse = sum2 - sum * sum / static_cast<double>(m);
    if (depth >= max_depth || m < 2 * static_cast<size_t>(min_leaf) || sse <= 0.0)
      return leaf(mean);

    int best_f = -1;
    double best_thr = 0.0, best_total = sse;
    std::vector<std::pair<double, double>> col(m);
    for (int f : features) {
      for (size_t i = 0; i < m; ++i) col[i] = {x.at(rows[i], f), y[rows[i]]};
      std::sort(col.begin(), col.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      double ls = 0.0, ls2 = 0.0;
      for (size_t p = 1; p < m; ++p) {
        ls += col[p - 1].second;
        ls2 += col[p - 1].second * col[p - 1].second;
        if (p < static_cast<size_t>(min_leaf) || m - p < static_cast<size_t>(min_leaf)) continue;
        if (!(col[p - 1].first < col[p].first)) continue;
        double rs = sum - ls, rs2 = sum2 - ls2;
        double total = (ls2 - ls * ls / static_cast<double>(p)) +
                       (rs2 - rs * rs / static_cast<double>(m - p));
        if (total < best_total) {
          best_total = total;
          best_f = f;
          best_thr = (col[p - 1].first + col[p].first) / 2.0;
        }
      }
    }
    if (best_f < 0) return leaf(mean);

    std::vector<uint32_t> left, right;
    for (uint32_t r : rows)
      (x.at(r, best_f) <= best_thr ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    int node = static_cast<int>(nodes.size());
    nodes.push_back({best_f, best_thr, -1, -1, mean});
    nodes[node].left = build(left, depth + 1);
    int l = nodes[node].left;  // nodes may reallocate between the two calls
    nodes[node].right = build(right, depth + 1);
    nodes[node].left = l;
    return node;
  }
};

}  // namespace

RegressionTree build_tree(const Matrix& x, const std::vector<double>& y,
                          std::span<const uint32_t> rows, std::span<const int> features,
                          int max_depth, int min_leaf) {
  TreeBuilder b{x, y, features, max_depth, min_leaf < 1 ? 1 : min_leaf, {}};
  std::vector<uint32_t> all(rows.begin(), rows.end());
  if (all.empty()) throw UsageError("cannot build a tree on zero rows");
  // Root must be node 0: reserve it, then graft.
  b.build(all, 0);
  RegressionTree t;
  t.nodes = std::move(b.nodes);
  return t;
}

namespace {

std::vector<int> all_features(size_t d) {
  std::vector<int> f(d);
  std::iota(f.begin(), f.end(), 0);
  return f;
}

std::vector<uint32_t> all_rows(size_t n) {
  std::vector<uint32_t> r(n);
  std::iota(r.begin(), r.end(), uint32_t{0});
  return r;
}

RidgeModel fit_ridge(const Matrix& x, const std::vector<double>& y, double lambda) {
  size_t n = x.rows, d = x.cols;
  RidgeModel m;
  m.feature_mean.assign(d, 0.0);
  for (size_t r = 0; r < n; ++r)
    for (size_t c = 0; c < d; ++c) m.feature_mean[c] += x.at(r, c);
  for (auto& v : m.feature_mean) v /= static_cast<double>(n);
  double ymean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  m.intercept = ymean;
  if (d == 0) return m;

  // Centered normal equations (G + lambda I) w = b, solved by Cholesky.
  Matrix g(d, d);
  std::vector<double> b(d, 0.0);
  for (size_t r = 0; r < n; ++r) {
    for (size_t i = 0; i < d; ++i) {
      double di = x.at(r, i) - m.feature_mean[i];
      b[i] += di * (y[r] - ymean);
      for (size_t j = i; j < d; ++j) g.at(i, j) += di * (x.at(r, j) - m.feature_mean[j]);
    }
  }
  double max_diag = 0.0;
  for (size_t i = 0; i < d; ++i) max_diag = std::max(max_diag, g.at(i, i));
  for (size_t i = 0; i < d; ++i) {
    g.at(i, i) += lambda;
    for (size_t j = i + 1; j < d; ++j) g.at(j, i) = g.at(i, j);
  }

  Matrix l(d, d);
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = 0; j <= i; ++j) {
      double s = g.at(i, j);
      for (size_t k = 0; k < j; ++k) s -= l.at(i, k) * l.at(j, k);
      if (i == j) {
        if (s <= max_diag * 1e-12)
          throw UsageError("ridge normal equations are singular; use lambda > 0");
        l.at(i, i) = std::sqrt(s);
      } else {
        l.at(i, j) = s / l.at(j, j);
      }
    }
  }
  std::vector<double> z(d, 0.0);
  for (size_t i = 0; i < d; ++i) {
    double s = b[i];
    for (size_t k = 0; k < i; ++k) s -= l.at(i, k) * z[k];
    z[i] = s / l.at(i, i);
  }
  m.coef.assign(d, 0.0);
  for (size_t i = d; i-- > 0;) {
    double s = z[i];
    for (size_t k = i + 1; k < d; ++k) s -= l.at(k, i) * m.coef[k];
    m.coef[i] = s / l.at(i, i);
  }
  return m;
}

double predict_ridge(const RidgeModel& m, std::span<const double> x) {
  double acc = m.intercept;
  for (size_t i = 0; i < m.coef.size(); ++i) acc += m.coef[i] * (x[i] - m.feature_mean[i]);
  return acc;
}

double predict_knn(const KnnModel& m, std::span<const double> x) {
  size_t n = m.x.rows;
  std::vector<std::pair<double, uint32_t>> dist(n);
  for (size_t r = 0; r < n; ++r) {
    double d2 = 0.0;
    for (size_t c = 0; c < m.x.cols; ++c) {
      double diff = m.x.at(r, c) - x[c];
      d2 += diff * diff;
    }
    dist[r] = {d2, static_cast<uint32_t>(r)};
  }
  size_t k = std::min<size_t>(static_cast<size_t>(m.k), n);
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  double acc = 0.0;
  for (size_t i = 0; i < k; ++i) acc += m.y[dist[i].second];
  return acc / static_cast<double>(k);
}

ForestModel fit_forest(const ModelSpec& spec, const Matrix& x, const std::vector<double>& y,
                       uint64_t seed) {
  int n_trees = spec.iparam("n_trees");
  int max_depth = spec.iparam("max_depth");
  double subsample = spec.param("feature_subsample");
  size_t n = x.rows, d = x.cols;
  size_t n_feats = std::max<size_t>(1, static_cast<size_t>(std::ceil(subsample * d)));

  ForestModel m;
  m.trees.reserve(n_trees);
  for (int t = 0; t < n_trees; ++t) {
    SplitMix64 rng(SplitMix64::derive(seed, static_cast<uint64_t>(t)));
    std::vector<uint32_t> rows(n);
    for (auto& r : rows) r = static_cast<uint32_t>(rng.below(n));
    std::vector<int> feats = all_features(d);
    for (size_t i = d - 1; i > 0; --i)
      std::swap(feats[i], feats[rng.below(i + 1)]);
    feats.resize(n_feats);
    std::sort(feats.begin(), feats.end());
    m.trees.push_back(build_tree(x, y, rows, feats, max_depth, 1));
  }
  return m;
}

GbrtModel fit_gbrt(const ModelSpec& spec, const Matrix& x, const std::vector<double>& y) {
  int n_stages = spec.iparam("n_stages");
  int max_depth = spec.iparam("max_depth");
  GbrtModel m;
  m.learning_rate = spec.param("learning_rate");
  size_t n = x.rows;
  m.base = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  std::vector<double> residual(n);
  std::vector<double> current(n, m.base);
  std::vector<uint32_t> rows = all_rows(n);
  std::vector<int> feats = all_features(x.cols);
  m.trees.reserve(n_stages);
  for (int s = 0; s < n_stages; ++s) {
    for (size_t i = 0; i < n; ++i) residual[i] = y[i] - current[i];
    RegressionTree tree = build_tree(x, residual, rows, feats, max_depth, 1);
    for (size_t i = 0; i < n; ++i) current[i] += m.learning_rate * tree.predict(x.row(i));
    m.trees.push_back(std::move(tree));
  }
  return m;
}

}  // namespace

double Model::predict_raw(std::span<const double> x) const {
  switch (kind) {
    case ModelKind::Ridge: return predict_ridge(std::get<RidgeModel>(state), x);
    case ModelKind::Knn: return predict_knn(std::get<KnnModel>(state), x);
    case ModelKind::Tree: return std::get<TreeModel>(state).tree.predict(x);
    case ModelKind::Forest: {
      const auto& m = std::get<ForestModel>(state);
      double acc = 0.0;
      for (const auto& t : m.trees) acc += t.predict(x);
      return acc / static_cast<double>(m.trees.size());
    }
    case ModelKind::Gbrt: {
      const auto& m = std::get<GbrtModel>(state);
      double acc = m.base;
      for (const auto& t : m.trees) acc += m.learning_rate * t.predict(x);
      return acc;
    }
  }
  return 0.0;
}

Model fit_model(const ModelSpec& spec, const Matrix& x, const std::vector<double>& y,
                uint64_t seed) {
  validate_spec(spec);
  if (x.rows == 0) throw UsageError("cannot fit a model on an empty dataset");
  if (x.rows != y.size()) throw UsageError("feature and target row counts differ");

  Model m;
  m.kind = spec.kind;
  switch (spec.kind) {
    case ModelKind::Ridge:
      m.state = fit_ridge(x, y, spec.param("lambda"));
      break;
    case ModelKind::Knn:
      m.state = KnnModel{x, y, spec.iparam("k")};
      break;
    case ModelKind::Tree: {
      auto rows = all_rows(x.rows);
      auto feats = all_features(x.cols);
      m.state = TreeModel{
          build_tree(x, y, rows, feats, spec.iparam("max_depth"), spec.iparam("min_leaf"))};
      break;
    }
    case ModelKind::Forest:
      m.state = fit_forest(spec, x, y, seed);
      break;
    case ModelKind::Gbrt:
      m.state = fit_gbrt(spec, x, y);
      break;
  }
  return m;
}

std::vector<Model> ensemble_fit(const ModelSpec& spec, const Matrix& x,
                                const std::vector<double>& y, int members, uint64_t seed) {
  if (members < 1) throw UsageError("ensemble needs at least 1 member");
  std::vector<Model> out;
  out.reserve(members);
  size_t n = x.rows;
  for (int b = 0; b < members; ++b) {
    SplitMix64 rng(SplitMix64::derive(seed, static_cast<uint64_t>(b)));
    std::vector<uint32_t> rows(n);
    for (auto& r : rows) r = static_cast<uint32_t>(rng.below(n));
    uint64_t model_seed = rng.next();
    std::vector<double> yb(n);
    for (size_t i = 0; i < n; ++i) yb[i] = y[rows[i]];
    out.push_back(fit_model(spec, x.gather_rows(rows), yb, model_seed));
  }
  return out;
}

double TrainedPredictor::predict(std::span<const double> x) const {
  if (ensemble.empty()) throw UsageError("predictor has no trained members");
  std::vector<double> z = whitener.apply(x);
  std::vector<double> v(selected.size());
  for (size_t i = 0; i < selected.size(); ++i) v[i] = z[static_cast<size_t>(selected[i])];
  double acc = 0.0;
  for (const auto& m : ensemble) acc += m.predict_raw(v);
  acc /= static_cast<double>(ensemble.size());
  return std::clamp(acc, 0.0, 1.0);
}

namespace {

std::vector<int> iota_selected(size_t d) {
  std::vector<int> s(d);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

}  // namespace

TrainedPredictor train(const ModelSpec& spec, const Dataset& data, Target target,
                       uint64_t seed) {
  if (data.size() == 0) throw UsageError("cannot train on an empty dataset");
  TrainedPredictor p;
  p.spec = spec;
  p.whitener = whiten_fit(data.x);
  Matrix xw = p.whitener.apply(data.x);
  p.selected = iota_selected(xw.cols);
  p.ensemble.push_back(fit_model(spec, xw, target_of(data, target), seed));
  return p;
}

TrainedPredictor bagging_train(const ModelSpec& spec, const Dataset& data, Target target,
                               int members, uint64_t seed) {
  if (data.size() == 0) throw UsageError("cannot train on an empty dataset");
  TrainedPredictor p;
  p.spec = spec;
  p.whitener = whiten_fit(data.x);
  Matrix xw = p.whitener.apply(data.x);
  p.selected = iota_selected(xw.cols);
  p.ensemble = ensemble_fit(spec, xw, target_of(data, target), members, seed);
  return p;
}

// --- persistence ----------------------------------------------------------
//
// The predictor artifact is reloaded on every prediction, so the format is
// a flat keyword/number token stream rather than JSON: from_chars-speed to
// parse, and to_chars shortest-round-trip so serialize∘parse is the
// identity on bytes as well as on values. Grammar in docs/formats.md.

namespace {

constexpr const char* kFormatName = "resilience-predictor";
constexpr int kFormatVersion = 1;

struct Writer {
  std::string out;

  void word(std::string_view w) {
    out.append(w);
    out.push_back(' ');
  }
  void integer(int64_t v) {
    char buf[24];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
    out.push_back(' ');
  }
  void number(double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
    out.push_back(' ');
  }
  void end_line() {
    if (!out.empty() && out.back() == ' ') out.back() = '\n';
  }
  void vec(std::string_view name, std::span<const double> v) {
    word(name);
    integer(static_cast<int64_t>(v.size()));
    for (double x : v) number(x);
    end_line();
  }
};

struct Cursor {
  const char* p;
  const char* end;

  explicit Cursor(std::string_view text) : p(text.data()), end(text.data() + text.size()) {}

  std::string_view token() {
    while (p != end && (*p == ' ' || *p == '\n' || *p == '\t' || *p == '\r')) ++p;
    if (p == end) throw DataError("malformed predictor file: unexpected end of file");
    const char* start = p;
    while (p != end && *p != ' ' && *p != '\n' && *p != '\t' && *p != '\r') ++p;
    return {start, static_cast<size_t>(p - start)};
  }
  void expect(std::string_view keyword) {
    std::string_view t = token();
    if (t != keyword)
      throw DataError("malformed predictor file: expected '" + std::string(keyword) +
                      "', got '" + std::string(t) + "'");
  }
  int64_t integer() {
    std::string_view t = token();
    int64_t v = 0;
    auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc{} || r.ptr != t.data() + t.size())
      throw DataError("malformed predictor file: bad integer '" + std::string(t) + "'");
    return v;
  }
  size_t count() {
    int64_t v = integer();
    if (v < 0 || v > (int64_t{1} << 32))
      throw DataError("malformed predictor file: implausible element count");
    return static_cast<size_t>(v);
  }
  double number() {
    std::string_view t = token();
    double v = 0.0;
    auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc{} || r.ptr != t.data() + t.size())
      throw DataError("malformed predictor file: bad number '" + std::string(t) + "'");
    return v;
  }
  std::vector<double> vec(std::string_view name) {
    expect(name);
    std::vector<double> v(count());
    for (double& x : v) x = number();
    return v;
  }
  bool at_end() {
    while (p != end && (*p == ' ' || *p == '\n' || *p == '\t' || *p == '\r')) ++p;
    return p == end;
  }
};

void write_tree(Writer& w, const RegressionTree& t) {
  w.word("tree");
  w.integer(static_cast<int64_t>(t.nodes.size()));
  for (const auto& n : t.nodes) {
    w.integer(n.feature);
    w.number(n.threshold);
    w.integer(n.left);
    w.integer(n.right);
    w.number(n.value);
  }
  w.end_line();
}

RegressionTree read_tree(Cursor& c) {
  c.expect("tree");
  RegressionTree t;
  t.nodes.resize(c.count());
  if (t.nodes.empty()) throw DataError("malformed predictor file: model tree has no nodes");
  for (auto& n : t.nodes) {
    n.feature = static_cast<int>(c.integer());
    n.threshold = c.number();
    n.left = static_cast<int>(c.integer());
    n.right = static_cast<int>(c.integer());
    n.value = c.number();
  }
  return t;
}

void write_matrix(Writer& w, std::string_view name, const Matrix& m) {
  w.word(name);
  w.integer(static_cast<int64_t>(m.rows));
  w.integer(static_cast<int64_t>(m.cols));
  for (double x : m.data) w.number(x);
  w.end_line();
}

Matrix read_matrix(Cursor& c, std::string_view name) {
  c.expect(name);
  Matrix m;
  m.rows = c.count();
  m.cols = c.count();
  if (m.cols != 0 && m.rows > (size_t{1} << 32) / m.cols)
    throw DataError("malformed predictor file: implausible matrix shape");
  m.data.resize(m.rows * m.cols);
  for (double& x : m.data) x = c.number();
  return m;
}

void write_model(Writer& w, const Model& m) {
  w.word("model");
  w.word(model_kind_name(m.kind));
  w.end_line();
  switch (m.kind) {
    case ModelKind::Ridge: {
      const auto& r = std::get<RidgeModel>(m.state);
      w.vec("feature_mean", r.feature_mean);
      w.vec("coef", r.coef);
      w.word("intercept");
      w.number(r.intercept);
      w.end_line();
      break;
    }
    case ModelKind::Knn: {
      const auto& k = std::get<KnnModel>(m.state);
      w.word("k");
      w.integer(k.k);
      w.end_line();
      write_matrix(w, "x", k.x);
      w.vec("y", k.y);
      break;
    }
    case ModelKind::Tree:
      write_tree(w, std::get<TreeModel>(m.state).tree);
      break;
    case ModelKind::Forest: {
      const auto& f = std::get<ForestModel>(m.state);
      w.word("trees");
      w.integer(static_cast<int64_t>(f.trees.size()));
      w.end_line();
      for (const auto& t : f.trees) write_tree(w, t);
      break;
    }
    case ModelKind::Gbrt: {
      const auto& g = std::get<GbrtModel>(m.state);
      w.word("base");
      w.number(g.base);
      w.word("learning_rate");
      w.number(g.learning_rate);
      w.end_line();
      w.word("trees");
      w.integer(static_cast<int64_t>(g.trees.size()));
      w.end_line();
      for (const auto& t : g.trees) write_tree(w, t);
      break;
    }
  }
}

Model read_model(Cursor& c) {
  c.expect("model");
  Model m;
  m.kind = model_kind_from_name(std::string(c.token()));
  switch (m.kind) {
    case ModelKind::Ridge: {
      RidgeModel r;
      r.feature_mean = c.vec("feature_mean");
      r.coef = c.vec("coef");
      c.expect("intercept");
      r.intercept = c.number();
      m.state = std::move(r);
      break;
    }
    case ModelKind::Knn: {
      KnnModel k;
      c.expect("k");
      k.k = static_cast<int>(c.integer());
      k.x = read_matrix(c, "x");
      k.y = c.vec("y");
      m.state = std::move(k);
      break;
    }
    case ModelKind::Tree:
      m.state = TreeModel{read_tree(c)};
      break;
    case ModelKind::Forest: {
      ForestModel f;
      c.expect("trees");
      f.trees.resize(c.count());
      for (auto& t : f.trees) t = read_tree(c);
      m.state = std::move(f);
      break;
    }
    case ModelKind::Gbrt: {
      GbrtModel g;
      c.expect("base");
      g.base = c.number();
      c.expect("learning_rate");
      g.learning_rate = c.number();
      c.expect("trees");
      g.trees.resize(c.count());
      for (auto& t : g.trees) t = read_tree(c);
      m.state = std::move(g);
      break;
    }
  }
  return m;
}

}  // namespace

std::string serialize_predictor(const TrainedPredictor& pred) {
  Writer w;
  w.word(kFormatName);
  w.integer(kFormatVersion);
  w.end_line();
  w.word("spec");
  w.word(model_kind_name(pred.spec.kind));
  w.integer(static_cast<int64_t>(pred.spec.params.size()));
  w.end_line();
  for (const auto& [name, value] : pred.spec.params) {
    w.word("param");
    w.word(name);
    w.number(value);
    w.end_line();
  }
  w.vec("mean", pred.whitener.mean);
  w.vec("eigenvalues", pred.whitener.eigenvalues);
  write_matrix(w, "w", pred.whitener.w);
  w.word("selected");
  w.integer(static_cast<int64_t>(pred.selected.size()));
  for (int s : pred.selected) w.integer(s);
  w.end_line();
  w.word("ensemble");
  w.integer(static_cast<int64_t>(pred.ensemble.size()));
  w.end_line();
  for (const auto& m : pred.ensemble) write_model(w, m);
  return std::move(w.out);
}

TrainedPredictor parse_predictor(const std::string& text) {
  Cursor c(text);
  if (c.at_end() || c.token() != kFormatName) throw DataError("not a predictor file");
  if (c.integer() > kFormatVersion)
    throw DataError("predictor file version is newer than this build supports");
  TrainedPredictor p;
  c.expect("spec");
  p.spec.kind = model_kind_from_name(std::string(c.token()));
  size_t n_params = c.count();
  for (size_t i = 0; i < n_params; ++i) {
    c.expect("param");
    std::string name(c.token());
    p.spec.params[name] = c.number();
  }
  p.whitener.mean = c.vec("mean");
  p.whitener.eigenvalues = c.vec("eigenvalues");
  p.whitener.w = read_matrix(c, "w");
  c.expect("selected");
  p.selected.resize(c.count());
  for (int& s : p.selected) s = static_cast<int>(c.integer());
  c.expect("ensemble");
  size_t members = c.count();
  for (size_t i = 0; i < members; ++i) p.ensemble.push_back(read_model(c));
  if (!c.at_end()) throw DataError("malformed predictor file: trailing content");
  if (p.ensemble.empty()) throw DataError("predictor file has an empty ensemble");
  for (int s : p.selected)
    if (s < 0 || static_cast<size_t>(s) >= p.whitener.w.rows)
      throw DataError("selected component out of range");
  return p;
}

}  // namespace faultcast::learn
