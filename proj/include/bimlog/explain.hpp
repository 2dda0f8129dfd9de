#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "bimlog/learn.hpp"
#include "bimlog/rng.hpp"
#include "bimlog/util.hpp"

namespace bimlog {

struct ShapExplanation {
  double base_value = 0.0;   // expected model output with nothing conditioned
  std::vector<double> phi;   // one attribution per feature
  double prediction = 0.0;

  double phi_sum() const {
    double s = 0.0;
    for (double v : phi) s += v;
    return s;
  }
};

/// Path-conditional expectation of a tree: conditioned features follow x,
/// unconditioned splits average both children weighted by training coverage.
inline double conditional_expectation(const Tree& tree, std::span<const double> x,
                                      const std::vector<bool>& conditioned, int node_index = 0) {
  const TreeNode& node = tree.nodes[static_cast<size_t>(node_index)];
  if (node.is_leaf()) return node.value;
  if (conditioned[static_cast<size_t>(node.feature)]) {
    const int next = x[static_cast<size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    return conditional_expectation(tree, x, conditioned, next);
  }
  const TreeNode& left = tree.nodes[static_cast<size_t>(node.left)];
  const TreeNode& right = tree.nodes[static_cast<size_t>(node.right)];
  const double wl = static_cast<double>(left.count) / static_cast<double>(node.count);
  const double wr = static_cast<double>(right.count) / static_cast<double>(node.count);
  return wl * conditional_expectation(tree, x, conditioned, node.left) +
         wr * conditional_expectation(tree, x, conditioned, node.right);
}

/// Coalition value oracle: maps a feature subset (bitmask) to a model output.
using CoalitionFn = std::function<double(std::uint32_t mask)>;

/// Coalition semantics per model family: trees use path-conditional
/// expectation averaged over the ensemble; linear and nearest-neighbor models
/// substitute the background mean for absent features.
inline CoalitionFn make_coalition_fn(const AnyModel& model, std::span<const double> x,
                                     std::span<const double> background_means) {
  const size_t p = x.size();
  if (model.is_forest()) {
    const ForestModel& forest = model.forest();
    return [&forest, x, p](std::uint32_t mask) {
      std::vector<bool> conditioned(p, false);
      for (size_t i = 0; i < p; ++i)
        if (mask & (1u << i)) conditioned[i] = true;
      double sum = 0.0;
      for (const auto& tree : forest.trees) sum += conditional_expectation(tree, x, conditioned);
      return sum / static_cast<double>(forest.trees.size());
    };
  }
  std::vector<double> means(background_means.begin(), background_means.end());
  const AnyModel* model_ptr = &model;
  return [model_ptr, x, means, p](std::uint32_t mask) {
    std::vector<double> z(p);
    for (size_t i = 0; i < p; ++i) z[i] = (mask & (1u << i)) ? x[i] : means[i];
    return model_ptr->predict(z);
  };
}

constexpr size_t kMaxExactFeatures = 15;

/// Exact Shapley values by subset enumeration; tractable up to 15 features.
inline std::vector<double> shapley_bruteforce(const CoalitionFn& f, size_t n_features) {
  if (n_features > kMaxExactFeatures)
    throw Error("TooManyFeaturesForExact",
                "subset enumeration is limited to " + std::to_string(kMaxExactFeatures) +
                    " features, got " + std::to_string(n_features));
  const std::uint32_t full = (1u << n_features) - 1u;

  std::vector<double> value(static_cast<size_t>(full) + 1);
  for (std::uint32_t mask = 0; mask <= full; ++mask) value[mask] = f(mask);

  std::vector<double> factorial(n_features + 1, 1.0);
  for (size_t i = 1; i <= n_features; ++i)
    factorial[i] = factorial[i - 1] * static_cast<double>(i);
  const double total = factorial[n_features];

  std::vector<double> phi(n_features, 0.0);
  for (size_t i = 0; i < n_features; ++i) {
    const std::uint32_t bit = 1u << i;
    for (std::uint32_t mask = 0; mask <= full; ++mask) {
      if (mask & bit) continue;
      const size_t s = static_cast<size_t>(std::popcount(mask));
      const double weight = factorial[s] * factorial[n_features - s - 1] / total;
      phi[i] += weight * (value[mask | bit] - value[mask]);
    }
  }
  return phi;
}

inline ShapExplanation explain_bruteforce(const AnyModel& model, std::span<const double> x,
                                          std::span<const double> background_means = {}) {
  const CoalitionFn f = make_coalition_fn(model, x, background_means);
  ShapExplanation out;
  out.phi = shapley_bruteforce(f, x.size());
  out.base_value = f(0);
  out.prediction = f((1u << x.size()) - 1u);
  return out;
}

// --- exact polynomial algorithm for trees -----------------------------------

namespace detail {

struct PathElement {
  int feature = -1;
  double zero_fraction = 1.0;
  double one_fraction = 1.0;
  double pweight = 1.0;
};

inline void extend_path(std::vector<PathElement>& path, int unique_depth, double zero_fraction,
                        double one_fraction, int feature) {
  if (path.size() < static_cast<size_t>(unique_depth) + 1) path.resize(static_cast<size_t>(unique_depth) + 1);
  path[static_cast<size_t>(unique_depth)] =
      {feature, zero_fraction, one_fraction, unique_depth == 0 ? 1.0 : 0.0};
  for (int i = unique_depth - 1; i >= 0; --i) {
    path[static_cast<size_t>(i) + 1].pweight += one_fraction * path[static_cast<size_t>(i)].pweight *
                                                static_cast<double>(i + 1) /
                                                static_cast<double>(unique_depth + 1);
    path[static_cast<size_t>(i)].pweight = zero_fraction * path[static_cast<size_t>(i)].pweight *
                                           static_cast<double>(unique_depth - i) /
                                           static_cast<double>(unique_depth + 1);
  }
}

inline void unwind_path(std::vector<PathElement>& path, int unique_depth, int path_index) {
  const double one_fraction = path[static_cast<size_t>(path_index)].one_fraction;
  const double zero_fraction = path[static_cast<size_t>(path_index)].zero_fraction;
  double next_one_portion = path[static_cast<size_t>(unique_depth)].pweight;
  for (int i = unique_depth - 1; i >= 0; --i) {
    if (one_fraction != 0.0) {
      const double tmp = path[static_cast<size_t>(i)].pweight;
      path[static_cast<size_t>(i)].pweight = next_one_portion * static_cast<double>(unique_depth + 1) /
                                             (static_cast<double>(i + 1) * one_fraction);
      next_one_portion = tmp - path[static_cast<size_t>(i)].pweight * zero_fraction *
                                   static_cast<double>(unique_depth - i) /
                                   static_cast<double>(unique_depth + 1);
    } else {
      path[static_cast<size_t>(i)].pweight = path[static_cast<size_t>(i)].pweight *
                                             static_cast<double>(unique_depth + 1) /
                                             (zero_fraction * static_cast<double>(unique_depth - i));
    }
  }
  for (int i = path_index; i < unique_depth; ++i) {
    path[static_cast<size_t>(i)].feature = path[static_cast<size_t>(i) + 1].feature;
    path[static_cast<size_t>(i)].zero_fraction = path[static_cast<size_t>(i) + 1].zero_fraction;
    path[static_cast<size_t>(i)].one_fraction = path[static_cast<size_t>(i) + 1].one_fraction;
  }
}

inline double unwound_path_sum(const std::vector<PathElement>& path, int unique_depth,
                               int path_index) {
  const double one_fraction = path[static_cast<size_t>(path_index)].one_fraction;
  const double zero_fraction = path[static_cast<size_t>(path_index)].zero_fraction;
  double next_one_portion = path[static_cast<size_t>(unique_depth)].pweight;
  double total = 0.0;
  for (int i = unique_depth - 1; i >= 0; --i) {
    if (one_fraction != 0.0) {
      const double tmp = next_one_portion * static_cast<double>(unique_depth + 1) /
                         (static_cast<double>(i + 1) * one_fraction);
      total += tmp;
      next_one_portion = path[static_cast<size_t>(i)].pweight -
                         tmp * zero_fraction * static_cast<double>(unique_depth - i) /
                             static_cast<double>(unique_depth + 1);
    } else {
      total += path[static_cast<size_t>(i)].pweight * static_cast<double>(unique_depth + 1) /
               (zero_fraction * static_cast<double>(unique_depth - i));
    }
  }
  return total;
}

inline void tree_shap_recurse(const Tree& tree, std::span<const double> x, std::vector<double>& phi,
                              int node_index, int unique_depth, std::vector<PathElement> path,
                              double parent_zero_fraction, double parent_one_fraction,
                              int parent_feature) {
  extend_path(path, unique_depth, parent_zero_fraction, parent_one_fraction, parent_feature);
  const TreeNode& node = tree.nodes[static_cast<size_t>(node_index)];

  if (node.is_leaf()) {
    for (int i = 1; i <= unique_depth; ++i) {
      const double w = unwound_path_sum(path, unique_depth, i);
      const PathElement& el = path[static_cast<size_t>(i)];
      phi[static_cast<size_t>(el.feature)] += w * (el.one_fraction - el.zero_fraction) * node.value;
    }
    return;
  }

  const bool goes_left = x[static_cast<size_t>(node.feature)] <= node.threshold;
  const int hot = goes_left ? node.left : node.right;
  const int cold = goes_left ? node.right : node.left;

  double incoming_zero_fraction = 1.0;
  double incoming_one_fraction = 1.0;
  int previous = 0;
  for (previous = 1; previous <= unique_depth; ++previous)
    if (path[static_cast<size_t>(previous)].feature == node.feature) break;
  if (previous <= unique_depth) {
    incoming_zero_fraction = path[static_cast<size_t>(previous)].zero_fraction;
    incoming_one_fraction = path[static_cast<size_t>(previous)].one_fraction;
    unwind_path(path, unique_depth, previous);
    unique_depth -= 1;
  }

  const double hot_fraction = static_cast<double>(tree.nodes[static_cast<size_t>(hot)].count) /
                              static_cast<double>(node.count);
  const double cold_fraction = static_cast<double>(tree.nodes[static_cast<size_t>(cold)].count) /
                               static_cast<double>(node.count);
  tree_shap_recurse(tree, x, phi, hot, unique_depth + 1, path,
                    hot_fraction * incoming_zero_fraction, incoming_one_fraction, node.feature);
  tree_shap_recurse(tree, x, phi, cold, unique_depth + 1, std::move(path),
                    cold_fraction * incoming_zero_fraction, 0.0, node.feature);
}

inline double tree_base_value(const Tree& tree, int node_index = 0) {
  const TreeNode& node = tree.nodes[static_cast<size_t>(node_index)];
  if (node.is_leaf()) return node.value;
  const TreeNode& left = tree.nodes[static_cast<size_t>(node.left)];
  const TreeNode& right = tree.nodes[static_cast<size_t>(node.right)];
  return (static_cast<double>(left.count) * tree_base_value(tree, node.left) +
          static_cast<double>(right.count) * tree_base_value(tree, node.right)) /
         static_cast<double>(node.count);
}

}  // namespace detail

/// Adds one tree's exact path-conditional attributions into phi.
inline void tree_shap_single(const Tree& tree, std::span<const double> x, std::vector<double>& phi) {
  std::vector<detail::PathElement> path;
  path.reserve(32);
  detail::tree_shap_recurse(tree, x, phi, 0, 0, std::move(path), 1.0, 1.0, -1);
}

/// Exact attributions for a tree ensemble: per-tree results averaged, which
/// matches the forest's mean aggregation.
inline ShapExplanation tree_shap(const ForestModel& forest, std::span<const double> x) {
  ShapExplanation out;
  out.phi.assign(forest.n_features, 0.0);
  double base = 0.0;
  std::vector<double> tree_phi(forest.n_features);
  for (const auto& tree : forest.trees) {
    std::fill(tree_phi.begin(), tree_phi.end(), 0.0);
    tree_shap_single(tree, x, tree_phi);
    for (size_t i = 0; i < tree_phi.size(); ++i) out.phi[i] += tree_phi[i];
    base += detail::tree_base_value(tree);
  }
  const double n_trees = static_cast<double>(forest.trees.size());
  for (auto& v : out.phi) v /= n_trees;
  out.base_value = base / n_trees;
  out.prediction = forest.predict(x);
  return out;
}

// --- permutation sampling estimator -------------------------------------------

struct SamplingEstimate {
  std::vector<double> phi;
  std::vector<double> stderr_phi;  // per-feature standard error of the estimate
};

/// Unbiased permutation-sampling estimate of the same coalition game the
/// exact routes evaluate. Seeded, so estimates are reproducible.
inline SamplingEstimate shapley_sampling(const CoalitionFn& f, size_t n_features,
                                         size_t n_permutations, std::uint64_t seed) {
  if (n_permutations < 1) throw Error("InvalidConfig", "need at least one permutation");
  if (n_features > 31) throw Error("TooManyFeaturesForExact", "sampling estimator uses 32-bit masks");
  Rng rng(derive_seed(seed, 0x5a4713e5ull));

  std::vector<double> sum(n_features, 0.0), sum_sq(n_features, 0.0);
  std::vector<size_t> order(n_features);
  for (size_t perm = 0; perm < n_permutations; ++perm) {
    std::iota(order.begin(), order.end(), size_t{0});
    rng.shuffle(order);
    std::uint32_t mask = 0;
    double previous = f(0);
    for (size_t feature : order) {
      mask |= (1u << feature);
      const double current = f(mask);
      const double marginal = current - previous;
      sum[feature] += marginal;
      sum_sq[feature] += marginal * marginal;
      previous = current;
    }
  }

  SamplingEstimate est;
  est.phi.resize(n_features);
  est.stderr_phi.resize(n_features);
  const double n = static_cast<double>(n_permutations);
  for (size_t i = 0; i < n_features; ++i) {
    est.phi[i] = sum[i] / n;
    const double variance = std::max(0.0, sum_sq[i] / n - est.phi[i] * est.phi[i]);
    est.stderr_phi[i] = n_permutations > 1 ? std::sqrt(variance / n) : 0.0;
  }
  return est;
}

// --- global importance ---------------------------------------------------------

struct GlobalImportance {
  std::vector<double> mean_abs_phi;    // per feature
  std::vector<size_t> ranking;         // feature indices, descending mean |phi|
  std::vector<double> value_phi_corr;  // sign of the value-attribution association
};

struct BeeswarmRow {
  size_t sample = 0;
  size_t feature = 0;
  double phi = 0.0;
  double value = 0.0;
};

inline GlobalImportance aggregate(std::span<const ShapExplanation> explanations,
                                  const Dataset& samples) {
  if (explanations.empty()) throw Error("InvalidConfig", "nothing to aggregate");
  const size_t p = explanations.front().phi.size();
  for (const auto& e : explanations)
    if (e.phi.size() != p)
      throw Error("LengthMismatch", "explanations have inconsistent feature counts");

  GlobalImportance out;
  out.mean_abs_phi.assign(p, 0.0);
  for (const auto& e : explanations)
    for (size_t i = 0; i < p; ++i) out.mean_abs_phi[i] += std::abs(e.phi[i]);
  for (auto& v : out.mean_abs_phi) v /= static_cast<double>(explanations.size());

  out.ranking.resize(p);
  std::iota(out.ranking.begin(), out.ranking.end(), size_t{0});
  std::stable_sort(out.ranking.begin(), out.ranking.end(), [&](size_t a, size_t b) {
    if (out.mean_abs_phi[a] != out.mean_abs_phi[b]) return out.mean_abs_phi[a] > out.mean_abs_phi[b];
    return a < b;
  });

  out.value_phi_corr.assign(p, 0.0);
  if (samples.n_cols == p && samples.rows() == explanations.size()) {
    const double n = static_cast<double>(explanations.size());
    for (size_t i = 0; i < p; ++i) {
      double mv = 0.0, mp = 0.0;
      for (size_t r = 0; r < explanations.size(); ++r) {
        mv += samples.at(r, i);
        mp += explanations[r].phi[i];
      }
      mv /= n;
      mp /= n;
      double cov = 0.0, vv = 0.0, vp = 0.0;
      for (size_t r = 0; r < explanations.size(); ++r) {
        const double dv = samples.at(r, i) - mv;
        const double dp = explanations[r].phi[i] - mp;
        cov += dv * dp;
        vv += dv * dv;
        vp += dp * dp;
      }
      out.value_phi_corr[i] = (vv > 0.0 && vp > 0.0) ? cov / std::sqrt(vv * vp) : 0.0;
    }
  }
  return out;
}

inline std::vector<BeeswarmRow> beeswarm_table(std::span<const ShapExplanation> explanations,
                                               const Dataset& samples) {
  std::vector<BeeswarmRow> rows;
  rows.reserve(explanations.size() * (explanations.empty() ? 0 : explanations.front().phi.size()));
  for (size_t r = 0; r < explanations.size(); ++r) {
    for (size_t i = 0; i < explanations[r].phi.size(); ++i)
      rows.push_back({r, i, explanations[r].phi[i], samples.at(r, i)});
  }
  return rows;
}

inline constexpr std::string_view kBeeswarmHeader = "sample_id,feature,phi,feature_value";

inline std::string format_beeswarm_csv(std::span<const BeeswarmRow> rows,
                                       std::span<const std::string_view> feature_names) {
  std::string out(kBeeswarmHeader);
  out += '\n';
  char buf[48];
  for (const auto& row : rows) {
    out += std::to_string(row.sample);
    out += ',';
    out += feature_names[row.feature];
    std::snprintf(buf, sizeof(buf), ",%.17g,%.17g", row.phi, row.value);
    out += buf;
    out += '\n';
  }
  return out;
}

inline Json importance_to_json(const GlobalImportance& importance,
                               std::span<const std::string_view> feature_names, size_t n_samples) {
  Json j;
  j["version"] = 1;
  j["n_samples"] = n_samples;
  Json ranking = Json::array();
  for (size_t feature : importance.ranking) {
    ranking.push_back({{"feature", std::string(feature_names[feature])},
                       {"mean_abs_phi", importance.mean_abs_phi[feature]},
                       {"value_phi_corr", importance.value_phi_corr[feature]}});
  }
  j["ranking"] = std::move(ranking);
  return j;
}

}  // namespace bimlog
