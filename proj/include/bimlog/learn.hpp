#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bimlog/rng.hpp"
#include "bimlog/util.hpp"

namespace bimlog {

using Json = nlohmann::ordered_json;

struct Dataset {
  size_t n_cols = 0;
  std::vector<double> x;  // row-major, rows() x n_cols
  std::vector<double> y;
  std::vector<std::string> groups;  // optional designer id per row

  size_t rows() const { return n_cols == 0 ? 0 : x.size() / n_cols; }
  double at(size_t r, size_t c) const { return x[r * n_cols + c]; }
  std::span<const double> row(size_t r) const { return {x.data() + r * n_cols, n_cols}; }

  void push_row(std::span<const double> values, double target, std::string group = {}) {
    x.insert(x.end(), values.begin(), values.end());
    y.push_back(target);
    if (!group.empty() || !groups.empty()) groups.push_back(std::move(group));
  }
};

inline Dataset subset(const Dataset& ds, std::span<const size_t> indices) {
  Dataset out;
  out.n_cols = ds.n_cols;
  out.x.reserve(indices.size() * ds.n_cols);
  out.y.reserve(indices.size());
  const bool has_groups = ds.groups.size() == ds.rows();
  for (size_t idx : indices) {
    auto r = ds.row(idx);
    out.x.insert(out.x.end(), r.begin(), r.end());
    out.y.push_back(ds.y[idx]);
    if (has_groups) out.groups.push_back(ds.groups[idx]);
  }
  return out;
}

// --- train/test split -------------------------------------------------------

struct SplitConfig {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  bool grouped = false;  // keep all rows of a designer on one side
};

struct Split {
  std::vector<size_t> train_idx;
  std::vector<size_t> test_idx;
};

inline Split split_dataset(const Dataset& ds, const SplitConfig& config) {
  const size_t n = ds.rows();
  if (config.test_fraction <= 0.0 || config.test_fraction >= 1.0)
    throw Error("InvalidConfig", "test fraction must lie strictly between 0 and 1");
  if (n < 2) throw Error("TooFewRows", "need at least 2 rows to split, got " + std::to_string(n));
  size_t n_test = static_cast<size_t>(static_cast<double>(n) * config.test_fraction + 1e-9);
  n_test = std::clamp<size_t>(n_test, 1, n - 1);

  Rng rng(derive_seed(config.seed, 0x5eed5u));
  Split split;
  if (!config.grouped) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    rng.shuffle(order);
    split.test_idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  } else {
    if (ds.groups.size() != n)
      throw Error("InvalidConfig", "grouped split requested but dataset has no group ids");
    std::vector<std::string> group_order;
    for (const auto& g : ds.groups)
      if (std::find(group_order.begin(), group_order.end(), g) == group_order.end())
        group_order.push_back(g);
    if (group_order.size() < 2)
      throw Error("TooFewRows", "grouped split needs at least 2 groups");
    rng.shuffle(group_order);
    std::vector<std::string> test_groups;
    size_t accumulated = 0;
    for (const auto& g : group_order) {
      if (accumulated >= n_test || test_groups.size() + 1 == group_order.size()) break;
      test_groups.push_back(g);
      accumulated += static_cast<size_t>(std::count(ds.groups.begin(), ds.groups.end(), g));
    }
    for (size_t i = 0; i < n; ++i) {
      const bool in_test =
          std::find(test_groups.begin(), test_groups.end(), ds.groups[i]) != test_groups.end();
      (in_test ? split.test_idx : split.train_idx).push_back(i);
    }
  }
  std::sort(split.train_idx.begin(), split.train_idx.end());
  std::sort(split.test_idx.begin(), split.test_idx.end());
  if (split.train_idx.empty() || split.test_idx.empty())
    throw Error("TooFewRows", "split left one side empty");
  return split;
}

// --- metrics ----------------------------------------------------------------

inline double rmse(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size())
    throw Error("LengthMismatch", "rmse needs equal-length vectors");
  if (y.empty()) throw Error("LengthMismatch", "rmse of empty vectors is undefined");
  double sum_sq = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    const double r = y_hat[i] - y[i];
    sum_sq += r * r;
  }
  return std::sqrt(sum_sq / static_cast<double>(y.size()));
}

inline double r2(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) throw Error("LengthMismatch", "r2 needs equal-length vectors");
  if (y.size() < 2) throw Error("LengthMismatch", "r2 needs at least 2 samples");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (ss_tot == 0.0) throw Error("DegenerateTarget", "r2 undefined for constant targets");
  return 1.0 - ss_res / ss_tot;
}

// --- regression trees ---------------------------------------------------------

struct TreeNode {
  int feature = -1;        // -1 marks a leaf
  double threshold = 0.0;  // route left iff x[feature] <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;      // mean of training targets reaching this node
  std::int64_t count = 0;  // training samples reaching this node

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const {
    int idx = 0;
    while (!nodes[static_cast<size_t>(idx)].is_leaf()) {
      const TreeNode& n = nodes[static_cast<size_t>(idx)];
      idx = x[static_cast<size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<size_t>(idx)].value;
  }
};

enum class ForestKind { Cart, Bagging, RandomForest, ExtraTrees };

inline std::string_view forest_kind_name(ForestKind kind) {
  switch (kind) {
    case ForestKind::Cart: return "cart";
    case ForestKind::Bagging: return "bagging";
    case ForestKind::RandomForest: return "random_forest";
    case ForestKind::ExtraTrees: return "extra_trees";
  }
  return "";
}

struct ForestParams {
  size_t n_trees = 100;
  size_t max_features = 0;  // 0 = consider every feature at every node
  size_t min_samples_leaf = 1;
  size_t min_samples_split = 2;
  bool bootstrap = false;  // fixed by the ensemble kind at fit time

  static ForestParams defaults_for(ForestKind kind, size_t n_features) {
    ForestParams p;
    switch (kind) {
      case ForestKind::Cart: p.n_trees = 1; break;
      case ForestKind::Bagging:
        p.n_trees = 50;
        p.bootstrap = true;
        break;
      case ForestKind::RandomForest:
        p.n_trees = 100;
        p.max_features = (n_features + 2) / 3;  // ceil(p / 3)
        p.bootstrap = true;
        break;
      case ForestKind::ExtraTrees: p.n_trees = 100; break;
    }
    return p;
  }
};

struct ForestModel {
  ForestKind kind = ForestKind::Cart;
  ForestParams params;
  std::uint64_t seed = 0;
  size_t n_features = 0;
  std::vector<Tree> trees;

  /// Arithmetic mean of the member trees.
  double predict(std::span<const double> x) const {
    double sum = 0.0;
    for (const auto& tree : trees) sum += tree.predict(x);
    return sum / static_cast<double>(trees.size());
  }
};

namespace detail {

struct TreeBuilder {
  const Dataset& data;
  const ForestParams& params;
  bool random_thresholds;
  Rng& rng;
  std::vector<TreeNode> nodes;
  std::vector<size_t> feature_scratch;

  TreeBuilder(const Dataset& d, const ForestParams& p, bool random_thr, Rng& r)
      : data(d), params(p), random_thresholds(random_thr), rng(r) {}

  struct SplitChoice {
    bool found = false;
    size_t feature = 0;
    double threshold = 0.0;
    double gain = -1.0;
  };

  // Candidate features for this node, ascending so equal gains resolve to the
  // lowest feature index.
  std::span<const size_t> pick_features() {
    const size_t p = data.n_cols;
    feature_scratch.resize(p);
    std::iota(feature_scratch.begin(), feature_scratch.end(), size_t{0});
    const size_t k = params.max_features == 0 ? p : std::min(params.max_features, p);
    if (k >= p) return {feature_scratch.data(), p};
    for (size_t i = 0; i < k; ++i) {
      size_t j = i + static_cast<size_t>(rng.uniform_int(static_cast<std::uint64_t>(p - i)));
      std::swap(feature_scratch[i], feature_scratch[j]);
    }
    std::sort(feature_scratch.begin(), feature_scratch.begin() + static_cast<std::ptrdiff_t>(k));
    return {feature_scratch.data(), k};
  }

  // Exhaustive best split on one feature by variance reduction. Targets are
  // centered on the node mean first; with a centered total of zero the gain
  // reduces to s_left^2 * (1/n_left + 1/n_right).
  void best_split_exhaustive(std::span<const size_t> indices, double node_mean, size_t feature,
                             SplitChoice& best) const {
    const size_t n = indices.size();
    std::vector<std::pair<double, double>> pairs;  // (feature value, centered y)
    pairs.reserve(n);
    for (size_t idx : indices) pairs.emplace_back(data.at(idx, feature), data.y[idx] - node_mean);
    std::sort(pairs.begin(), pairs.end());

    double left_sum = 0.0;
    for (size_t i = 0; i + 1 < n; ++i) {
      left_sum += pairs[i].second;
      if (pairs[i].first == pairs[i + 1].first) continue;
      const size_t n_left = i + 1;
      const size_t n_right = n - n_left;
      if (n_left < params.min_samples_leaf || n_right < params.min_samples_leaf) continue;
      // midpoint of the two distinct values, nudged inward if rounding hit a bound
      double threshold = pairs[i].first + (pairs[i + 1].first - pairs[i].first) / 2.0;
      if (threshold <= pairs[i].first) threshold = std::nextafter(pairs[i].first, pairs[i + 1].first);
      if (threshold >= pairs[i + 1].first) threshold = std::nextafter(pairs[i + 1].first, pairs[i].first);
      if (threshold <= pairs[i].first || threshold >= pairs[i + 1].first) continue;
      const double gain =
          left_sum * left_sum *
          (1.0 / static_cast<double>(n_left) + 1.0 / static_cast<double>(n_right));
      // features and thresholds are visited in ascending order, so a strict
      // improvement test keeps the lowest (feature, threshold) among ties
      if (gain > best.gain) best = {true, feature, threshold, gain};
    }
  }

  // One uniform random threshold between the node's min and max of the
  // feature, scored with the same variance-reduction gain.
  void split_random_threshold(std::span<const size_t> indices, double node_mean, size_t feature,
                              SplitChoice& best) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (size_t idx : indices) {
      const double v = data.at(idx, feature);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(lo < hi)) return;  // constant feature at this node
    double threshold = lo + rng.uniform() * (hi - lo);
    if (threshold <= lo) threshold = std::nextafter(lo, hi);
    if (threshold >= hi) threshold = std::nextafter(hi, lo);
    if (!(lo <= threshold && threshold < hi)) return;

    size_t n_left = 0;
    double left_sum = 0.0;
    for (size_t idx : indices) {
      if (data.at(idx, feature) <= threshold) {
        ++n_left;
        left_sum += data.y[idx] - node_mean;
      }
    }
    const size_t n_right = indices.size() - n_left;
    if (n_left < params.min_samples_leaf || n_right < params.min_samples_leaf) return;
    const double gain =
        left_sum * left_sum * (1.0 / static_cast<double>(n_left) + 1.0 / static_cast<double>(n_right));
    if (gain > best.gain) best = {true, feature, threshold, gain};
  }

  int build(std::vector<size_t>& indices) {
    const size_t n = indices.size();
    double mean = 0.0;
    for (size_t idx : indices) mean += data.y[idx];
    mean /= static_cast<double>(n);

    const int node_index = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{-1, 0.0, -1, -1, mean, static_cast<std::int64_t>(n)});

    if (n < params.min_samples_split) return node_index;
    bool constant_target = true;
    for (size_t idx : indices) {
      if (data.y[idx] != data.y[indices[0]]) {
        constant_target = false;
        break;
      }
    }
    if (constant_target) return node_index;

    SplitChoice best;
    for (size_t feature : pick_features()) {
      if (random_thresholds) {
        split_random_threshold(indices, mean, feature, best);
      } else {
        best_split_exhaustive(indices, mean, feature, best);
      }
    }
    if (!best.found) return node_index;

    std::vector<size_t> left_idx, right_idx;
    left_idx.reserve(n);
    right_idx.reserve(n);
    for (size_t idx : indices) {
      (data.at(idx, best.feature) <= best.threshold ? left_idx : right_idx).push_back(idx);
    }
    indices.clear();
    indices.shrink_to_fit();

    nodes[static_cast<size_t>(node_index)].feature = static_cast<int>(best.feature);
    nodes[static_cast<size_t>(node_index)].threshold = best.threshold;
    const int left = build(left_idx);
    nodes[static_cast<size_t>(node_index)].left = left;
    const int right = build(right_idx);
    nodes[static_cast<size_t>(node_index)].right = right;
    return node_index;
  }
};

inline Tree fit_tree(const Dataset& train, const ForestParams& params, bool bootstrap,
                     bool random_thresholds, std::uint64_t tree_seed) {
  Rng rng(tree_seed);
  const size_t n = train.rows();
  std::vector<size_t> indices;
  indices.reserve(n);
  if (bootstrap) {
    for (size_t i = 0; i < n; ++i)
      indices.push_back(static_cast<size_t>(rng.uniform_int(static_cast<std::uint64_t>(n))));
    std::sort(indices.begin(), indices.end());
  } else {
    indices.resize(n);
    std::iota(indices.begin(), indices.end(), size_t{0});
  }
  TreeBuilder builder(train, params, random_thresholds, rng);
  builder.build(indices);
  Tree tree;
  tree.nodes = std::move(builder.nodes);
  return tree;
}

}  // namespace detail

/// Trains a tree ensemble. Trees are fitted independently with per-tree seeds
/// derived from (seed, tree index), so a worker pool never changes the model.
inline ForestModel fit_forest(ForestKind kind, const Dataset& train, ForestParams params,
                              std::uint64_t seed, size_t workers = 1) {
  if (train.rows() == 0) throw Error("TooFewRows", "cannot fit a forest on an empty dataset");
  if (params.n_trees < 1) throw Error("InvalidConfig", "tree count must be >= 1");
  if (kind == ForestKind::Cart) params.n_trees = 1;
  params.bootstrap = kind == ForestKind::Bagging || kind == ForestKind::RandomForest;
  const bool random_thresholds = kind == ForestKind::ExtraTrees;

  ForestModel model;
  model.kind = kind;
  model.params = params;
  model.seed = seed;
  model.n_features = train.n_cols;
  model.trees.resize(params.n_trees);
  parallel_for(params.n_trees, workers, [&](size_t t) {
    model.trees[t] = detail::fit_tree(train, params, params.bootstrap, random_thresholds,
                                      derive_seed(seed, t));
  });
  return model;
}

// --- linear baselines ---------------------------------------------------------

enum class LinearKind { Ols, Ridge };

struct LinearModel {
  LinearKind kind = LinearKind::Ols;
  double lambda = 0.0;
  double intercept = 0.0;
  std::vector<double> weights;
  bool rank_fallback = false;  // OLS hit rank deficiency and fell back to tiny-lambda ridge

  double predict(std::span<const double> x) const {
    double out = intercept;
    for (size_t i = 0; i < weights.size(); ++i) out += weights[i] * x[i];
    return out;
  }
};

/// Least squares / ridge on centered data; the intercept is never penalized.
inline LinearModel fit_linear(LinearKind kind, const Dataset& train, double lambda = 1.0) {
  const size_t n = train.rows();
  const size_t p = train.n_cols;
  if (n == 0) throw Error("TooFewRows", "cannot fit a linear model on an empty dataset");

  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (size_t r = 0; r < n; ++r) {
    for (size_t c = 0; c < p; ++c) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = train.at(r, c);
    y(static_cast<Eigen::Index>(r)) = train.y[r];
  }
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  x.rowwise() -= x_mean;
  y.array() -= y_mean;

  LinearModel model;
  model.kind = kind;
  Eigen::VectorXd w;
  if (kind == LinearKind::Ols) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < static_cast<Eigen::Index>(p)) {
      model.rank_fallback = true;
      model.lambda = 1e-8;
      const Eigen::MatrixXd gram =
          x.transpose() * x + model.lambda * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p),
                                                                       static_cast<Eigen::Index>(p));
      w = gram.ldlt().solve(x.transpose() * y);
    } else {
      w = qr.solve(y);
    }
  } else {
    if (lambda < 0) throw Error("InvalidConfig", "ridge lambda must be >= 0");
    model.lambda = lambda;
    const Eigen::MatrixXd gram =
        x.transpose() * x + lambda * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p),
                                                               static_cast<Eigen::Index>(p));
    w = gram.ldlt().solve(x.transpose() * y);
  }
  model.weights.assign(w.data(), w.data() + w.size());
  model.intercept = y_mean - x_mean * w;
  return model;
}

// --- k nearest neighbors --------------------------------------------------------

struct KnnModel {
  size_t k = 5;
  size_t n_cols = 0;
  std::vector<double> train_x;  // row-major copy of the training matrix
  std::vector<double> train_y;

  double predict(std::span<const double> x) const {
    const size_t n = train_y.size();
    std::vector<std::pair<double, size_t>> dist(n);
    for (size_t r = 0; r < n; ++r) {
      double d2 = 0.0;
      const double* row = train_x.data() + r * n_cols;
      for (size_t c = 0; c < n_cols; ++c) {
        const double diff = x[c] - row[c];
        d2 += diff * diff;
      }
      dist[r] = {d2, r};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    double sum = 0.0;
    for (size_t i = 0; i < k; ++i) sum += train_y[dist[i].second];
    return sum / static_cast<double>(k);
  }
};

inline KnnModel fit_knn(const Dataset& train, size_t k) {
  if (k < 1 || k > train.rows())
    throw Error("InvalidConfig", "knn requires 1 <= k <= n, got k=" + std::to_string(k) +
                                     " for n=" + std::to_string(train.rows()));
  KnnModel model;
  model.k = k;
  model.n_cols = train.n_cols;
  model.train_x = train.x;
  model.train_y = train.y;
  return model;
}

// --- unified model handle --------------------------------------------------------

struct AnyModel {
  std::variant<ForestModel, LinearModel, KnnModel> impl;

  double predict(std::span<const double> x) const {
    return std::visit([&](const auto& m) { return m.predict(x); }, impl);
  }

  std::vector<double> predict_rows(const Dataset& ds) const {
    std::vector<double> out(ds.rows());
    for (size_t r = 0; r < ds.rows(); ++r) out[r] = predict(ds.row(r));
    return out;
  }

  bool is_forest() const { return std::holds_alternative<ForestModel>(impl); }
  const ForestModel& forest() const { return std::get<ForestModel>(impl); }

  std::string kind_name() const {
    if (const auto* f = std::get_if<ForestModel>(&impl)) return std::string(forest_kind_name(f->kind));
    if (const auto* l = std::get_if<LinearModel>(&impl))
      return l->kind == LinearKind::Ols ? "ols" : "ridge";
    return "knn";
  }
};

// --- model file (JSON) -----------------------------------------------------------

namespace detail {

inline Json tree_node_to_json(const Tree& tree, int index) {
  const TreeNode& n = tree.nodes[static_cast<size_t>(index)];
  Json j;
  if (n.is_leaf()) {
    j["leaf"] = true;
    j["value"] = n.value;
    j["count"] = n.count;
  } else {
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
    j["left"] = tree_node_to_json(tree, n.left);
    j["right"] = tree_node_to_json(tree, n.right);
  }
  return j;
}

// Rebuilds a node arena from the recursive encoding; internal counts and
// means are recomputed from the leaves.
inline int tree_node_from_json(const Json& j, Tree& tree) {
  const int index = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (j.contains("leaf")) {
    tree.nodes[static_cast<size_t>(index)].value = j.at("value").get<double>();
    tree.nodes[static_cast<size_t>(index)].count = j.at("count").get<std::int64_t>();
    return index;
  }
  const int feature = j.at("feature").get<int>();
  const double threshold = j.at("threshold").get<double>();
  const int left = tree_node_from_json(j.at("left"), tree);
  const int right = tree_node_from_json(j.at("right"), tree);
  TreeNode& n = tree.nodes[static_cast<size_t>(index)];
  n.feature = feature;
  n.threshold = threshold;
  n.left = left;
  n.right = right;
  const TreeNode& l = tree.nodes[static_cast<size_t>(left)];
  const TreeNode& r = tree.nodes[static_cast<size_t>(right)];
  n.count = l.count + r.count;
  n.value = (l.value * static_cast<double>(l.count) + r.value * static_cast<double>(r.count)) /
            static_cast<double>(n.count);
  return index;
}

}  // namespace detail

inline Json model_to_json(const AnyModel& model) {
  Json j;
  j["version"] = 1;
  j["kind"] = model.kind_name();
  if (const auto* f = std::get_if<ForestModel>(&model.impl)) {
    j["seed"] = f->seed;
    j["n_features"] = f->n_features;
    j["params"] = {{"n_trees", f->params.n_trees},
                   {"max_features", f->params.max_features},
                   {"min_samples_leaf", f->params.min_samples_leaf},
                   {"min_samples_split", f->params.min_samples_split},
                   {"bootstrap", f->params.bootstrap}};
    Json trees = Json::array();
    for (const auto& tree : f->trees) trees.push_back(detail::tree_node_to_json(tree, 0));
    j["trees"] = std::move(trees);
  } else if (const auto* l = std::get_if<LinearModel>(&model.impl)) {
    j["lambda"] = l->lambda;
    j["intercept"] = l->intercept;
    j["weights"] = l->weights;
    j["rank_fallback"] = l->rank_fallback;
  } else {
    const auto& k = std::get<KnnModel>(model.impl);
    j["k"] = k.k;
    j["n_features"] = k.n_cols;
    j["train_y"] = k.train_y;
    Json rows = Json::array();
    for (size_t r = 0; r < k.train_y.size(); ++r) {
      rows.push_back(std::vector<double>(k.train_x.begin() + static_cast<std::ptrdiff_t>(r * k.n_cols),
                                         k.train_x.begin() + static_cast<std::ptrdiff_t>((r + 1) * k.n_cols)));
    }
    j["train_x"] = std::move(rows);
  }
  return j;
}

inline AnyModel model_from_json(const Json& j) {
  if (!j.contains("version") || j.at("version").get<int>() != 1)
    throw Error("WrongFileFormat", "unsupported model file version");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "ols" || kind == "ridge") {
    LinearModel m;
    m.kind = kind == "ols" ? LinearKind::Ols : LinearKind::Ridge;
    m.lambda = j.at("lambda").get<double>();
    m.intercept = j.at("intercept").get<double>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.rank_fallback = j.at("rank_fallback").get<bool>();
    return AnyModel{m};
  }
  if (kind == "knn") {
    KnnModel m;
    m.k = j.at("k").get<size_t>();
    m.n_cols = j.at("n_features").get<size_t>();
    m.train_y = j.at("train_y").get<std::vector<double>>();
    for (const auto& row : j.at("train_x")) {
      const auto values = row.get<std::vector<double>>();
      m.train_x.insert(m.train_x.end(), values.begin(), values.end());
    }
    return AnyModel{m};
  }
  ForestModel m;
  if (kind == "cart") m.kind = ForestKind::Cart;
  else if (kind == "bagging") m.kind = ForestKind::Bagging;
  else if (kind == "random_forest") m.kind = ForestKind::RandomForest;
  else if (kind == "extra_trees") m.kind = ForestKind::ExtraTrees;
  else throw Error("WrongFileFormat", "unknown model kind '" + kind + "'");
  m.seed = j.at("seed").get<std::uint64_t>();
  m.n_features = j.at("n_features").get<size_t>();
  const Json& p = j.at("params");
  m.params.n_trees = p.at("n_trees").get<size_t>();
  m.params.max_features = p.at("max_features").get<size_t>();
  m.params.min_samples_leaf = p.at("min_samples_leaf").get<size_t>();
  m.params.min_samples_split = p.at("min_samples_split").get<size_t>();
  m.params.bootstrap = p.at("bootstrap").get<bool>();
  for (const auto& tj : j.at("trees")) {
    Tree tree;
    detail::tree_node_from_json(tj, tree);
    m.trees.push_back(std::move(tree));
  }
  return AnyModel{m};
}

// --- model suite and leaderboard ---------------------------------------------------

struct ModelSpec {
  std::string name;
  std::function<AnyModel(const Dataset&, std::uint64_t seed, size_t workers)> fit;
};

/// The fixed seven-model comparison suite: two linear baselines, a nearest
/// neighbor baseline, and the four tree ensembles.
inline std::vector<ModelSpec> default_suite(size_t n_features) {
  std::vector<ModelSpec> suite;
  suite.push_back({"ols", [](const Dataset& train, std::uint64_t, size_t) {
                     return AnyModel{fit_linear(LinearKind::Ols, train)};
                   }});
  suite.push_back({"ridge", [](const Dataset& train, std::uint64_t, size_t) {
                     return AnyModel{fit_linear(LinearKind::Ridge, train, 1.0)};
                   }});
  suite.push_back({"knn5", [](const Dataset& train, std::uint64_t, size_t) {
                     return AnyModel{fit_knn(train, std::min<size_t>(5, train.rows()))};
                   }});
  suite.push_back({"cart", [n_features](const Dataset& train, std::uint64_t seed, size_t workers) {
                     return AnyModel{fit_forest(ForestKind::Cart, train,
                                                ForestParams::defaults_for(ForestKind::Cart, n_features),
                                                seed, workers)};
                   }});
  suite.push_back({"bagging50", [n_features](const Dataset& train, std::uint64_t seed, size_t workers) {
                     return AnyModel{fit_forest(ForestKind::Bagging, train,
                                                ForestParams::defaults_for(ForestKind::Bagging, n_features),
                                                seed, workers)};
                   }});
  suite.push_back(
      {"random_forest100", [n_features](const Dataset& train, std::uint64_t seed, size_t workers) {
         return AnyModel{fit_forest(ForestKind::RandomForest, train,
                                    ForestParams::defaults_for(ForestKind::RandomForest, n_features),
                                    seed, workers)};
       }});
  suite.push_back(
      {"extra_trees100", [n_features](const Dataset& train, std::uint64_t seed, size_t workers) {
         return AnyModel{fit_forest(ForestKind::ExtraTrees, train,
                                    ForestParams::defaults_for(ForestKind::ExtraTrees, n_features),
                                    seed, workers)};
       }});
  return suite;
}

struct LeaderboardRow {
  std::string model;
  bool ok = false;
  double train_rmse = 0.0;
  double train_r2 = 0.0;
  double test_rmse = 0.0;
  double test_r2 = 0.0;
  size_t n_test = 0;
  std::string error;  // set when the model failed; metrics are then meaningless
};

/// Trains every suite member on the identical split and ranks them by test
/// R^2 (ties: lower test RMSE, then suite order). A failing model is listed
/// with its error; the rest proceed.
inline std::vector<LeaderboardRow> compare_models(const Dataset& ds,
                                                  const std::vector<ModelSpec>& suite,
                                                  const SplitConfig& split_config,
                                                  std::uint64_t model_seed = 0,
                                                  size_t workers = 1) {
  if (suite.empty()) throw Error("InvalidConfig", "model suite is empty");
  const Split split = split_dataset(ds, split_config);
  const Dataset train = subset(ds, split.train_idx);
  const Dataset test = subset(ds, split.test_idx);

  std::vector<LeaderboardRow> rows;
  rows.reserve(suite.size());
  for (const auto& spec : suite) {
    LeaderboardRow row;
    row.model = spec.name;
    row.n_test = test.rows();
    try {
      const AnyModel model = spec.fit(train, model_seed, workers);
      const std::vector<double> train_pred = model.predict_rows(train);
      const std::vector<double> test_pred = model.predict_rows(test);
      row.train_rmse = rmse(train.y, train_pred);
      row.train_r2 = r2(train.y, train_pred);
      row.test_rmse = rmse(test.y, test_pred);
      row.test_r2 = r2(test.y, test_pred);
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }

  std::vector<size_t> order(rows.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (rows[a].ok != rows[b].ok) return rows[a].ok;
    if (!rows[a].ok) return false;  // failed models keep suite order
    if (rows[a].test_r2 != rows[b].test_r2) return rows[a].test_r2 > rows[b].test_r2;
    if (rows[a].test_rmse != rows[b].test_rmse) return rows[a].test_rmse < rows[b].test_rmse;
    return false;
  });
  std::vector<LeaderboardRow> sorted;
  sorted.reserve(rows.size());
  for (size_t idx : order) sorted.push_back(std::move(rows[idx]));
  return sorted;
}

}  // namespace bimlog
