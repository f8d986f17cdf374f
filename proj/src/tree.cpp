/*******************************************************************************
 * Copyright 2026 The convnarr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *******************************************************************************/
#include "convnarr/tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "convnarr/evaluation.hpp"

namespace convnarr::tree {

void Hyperparams::check() const {
  if (minsplit < 2) throw std::invalid_argument("minsplit must be >= 2");
  if (maxdepth < 1) throw std::invalid_argument("maxdepth must be >= 1");
  if (!(cp >= 0.0 && cp <= 1.0)) throw std::invalid_argument("cp must lie in [0, 1]");
}

namespace {

double tie_tolerance(double scale) { return 1e-12 * std::max(1.0, scale); }

// Best split over the rows in `idx` for one column. Reduction uses
// nL * nR / n * (meanL - meanR)^2, which equals the SSE decrease.
std::optional<Split> best_split_rows(const std::function<double(std::size_t)>& value,
                                     std::span<const double> y, std::vector<std::size_t> idx) {
  if (idx.size() < 2) return std::nullopt;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
  const double total = std::accumulate(idx.begin(), idx.end(), 0.0,
                                       [&](double s, std::size_t i) { return s + y[i]; });
  const double n = static_cast<double>(idx.size());
  std::optional<Split> best;
  double left_sum = 0.0;
  for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
    left_sum += y[idx[k]];
    const double lo = value(idx[k]);
    const double hi = value(idx[k + 1]);
    if (!(lo < hi)) continue;
    const double nl = static_cast<double>(k + 1);
    const double nr = n - nl;
    const double diff = left_sum / nl - (total - left_sum) / nr;
    const double reduction = nl * nr / n * diff * diff;
    if (!best || reduction > best->sse_reduction + tie_tolerance(best->sse_reduction)) {
      best = Split{lo + (hi - lo) / 2.0, reduction};
    }
  }
  return best;
}

double sse_of(std::span<const double> y, const std::vector<std::size_t>& idx, double& mean) {
  mean = 0.0;
  for (auto i : idx) mean += y[i];
  mean /= static_cast<double>(idx.size());
  double sse = 0.0;
  for (auto i : idx) sse += (y[i] - mean) * (y[i] - mean);
  return sse;
}

}  // namespace

std::optional<Split> best_split(std::span<const double> column, std::span<const double> targets) {
  if (column.size() != targets.size()) throw std::invalid_argument("best_split: length mismatch");
  std::vector<std::size_t> idx(column.size());
  std::iota(idx.begin(), idx.end(), 0);
  return best_split_rows([&](std::size_t i) { return column[i]; }, targets, std::move(idx));
}

TreeModel::TreeModel(std::vector<Node> nodes, std::size_t n_features, std::vector<std::string> feature_names)
    : nodes_(std::move(nodes)), n_features_(n_features), feature_names_(std::move(feature_names)) {}

double TreeModel::predict(std::span<const double> x) const {
  if (nodes_.empty()) throw std::logic_error("predict on an unfitted tree");
  std::size_t i = 0;
  while (!nodes_[i].leaf) {
    const auto f = static_cast<std::size_t>(nodes_[i].feature);
    if (f >= x.size()) {
      throw std::out_of_range("tree tests feature " + std::to_string(f) + " but the input has " +
                              std::to_string(x.size()) + " values");
    }
    i = static_cast<std::size_t>(x[f] <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right);
  }
  return nodes_[i].prediction;
}

std::size_t TreeModel::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.leaf; }));
}

int TreeModel::depth() const {
  std::function<int(int)> rec = [&](int i) -> int {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    return n.leaf ? 0 : 1 + std::max(rec(n.left), rec(n.right));
  };
  return nodes_.empty() ? 0 : rec(0);
}

std::string TreeModel::to_json() const {
  std::function<nlohmann::ordered_json(int)> rec = [&](int i) {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    nlohmann::ordered_json j;
    if (n.leaf) {
      j["prediction"] = n.prediction;
      j["n"] = n.n;
      return j;
    }
    const auto f = static_cast<std::size_t>(n.feature);
    j["feature"] = f < feature_names_.size() ? feature_names_[f] : "x" + std::to_string(f);
    j["feature_index"] = n.feature;
    j["threshold"] = n.threshold;
    j["n"] = n.n;
    j["prediction"] = n.prediction;
    j["left"] = rec(n.left);
    j["right"] = rec(n.right);
    return j;
  };
  nlohmann::ordered_json out;
  out["n_features"] = n_features_;
  out["feature_names"] = feature_names_;
  out["root"] = nodes_.empty() ? nlohmann::ordered_json() : rec(0);
  return out.dump(2) + "\n";
}

TreeModel TreeModel::from_json(std::string_view json) {
  const auto j = nlohmann::json::parse(json);
  std::vector<Node> nodes;
  std::function<int(const nlohmann::json&)> rec = [&](const nlohmann::json& jn) -> int {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    Node n;
    n.n = jn.at("n").get<std::size_t>();
    n.prediction = jn.at("prediction").get<double>();
    if (jn.contains("left")) {
      n.leaf = false;
      n.feature = jn.at("feature_index").get<int>();
      n.threshold = jn.at("threshold").get<double>();
      n.left = rec(jn.at("left"));
      n.right = rec(jn.at("right"));
    }
    nodes[static_cast<std::size_t>(id)] = n;
    return id;
  };
  rec(j.at("root"));
  return TreeModel(std::move(nodes), j.at("n_features").get<std::size_t>(),
                   j.value("feature_names", std::vector<std::string>{}));
}

TreeModel fit(const Matrix& x, std::span<const double> y, const Hyperparams& hp,
              std::vector<std::string> feature_names) {
  hp.check();
  if (x.empty() || y.empty()) throw std::invalid_argument("fit: empty data");
  if (x.size() != y.size()) throw std::invalid_argument("fit: row count differs from target count");
  const std::size_t d = x.front().size();
  for (const auto& row : x) {
    if (row.size() != d) throw std::invalid_argument("fit: ragged feature matrix");
  }

  std::vector<Node> nodes;
  std::vector<std::size_t> all(x.size());
  std::iota(all.begin(), all.end(), 0);
  double root_mean = 0.0;
  const double root_sse = sse_of(y, all, root_mean);

  std::function<int(std::vector<std::size_t>, int)> grow = [&](std::vector<std::size_t> idx, int depth) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    Node node;
    node.n = idx.size();
    node.sse = sse_of(y, idx, node.prediction);

    std::optional<Split> best;
    int best_feature = -1;
    if (depth < hp.maxdepth && static_cast<int>(idx.size()) >= hp.minsplit && root_sse > 0.0) {
      for (std::size_t f = 0; f < d; ++f) {
        const auto s = best_split_rows([&](std::size_t i) { return x[i][f]; }, y, idx);
        if (s && (!best || s->sse_reduction > best->sse_reduction + tie_tolerance(best->sse_reduction))) {
          best = s;
          best_feature = static_cast<int>(f);
        }
      }
    }
    if (best && best->sse_reduction > tie_tolerance(root_sse) && best->sse_reduction / root_sse > hp.cp) {
      std::vector<std::size_t> left, right;
      for (auto i : idx) {
        (x[i][static_cast<std::size_t>(best_feature)] <= best->threshold ? left : right).push_back(i);
      }
      node.leaf = false;
      node.feature = best_feature;
      node.threshold = best->threshold;
      node.left = grow(std::move(left), depth + 1);
      node.right = grow(std::move(right), depth + 1);
    }
    nodes[static_cast<std::size_t>(id)] = node;
    return id;
  };
  grow(all, 0);
  return TreeModel(std::move(nodes), d, std::move(feature_names));
}

std::vector<Hyperparams> default_grid() {
  std::vector<Hyperparams> grid;
  for (int minsplit : {2, 5, 10, 20}) {
    for (int maxdepth : {2, 3, 4, 6}) {
      for (double cp : {0.001, 0.01, 0.05}) grid.push_back({minsplit, maxdepth, cp});
    }
  }
  return grid;
}

GridResult grid_search_cv(const Matrix& x, std::span<const double> y, std::span<const int> folds,
                          std::span<const Hyperparams> grid) {
  if (grid.empty()) throw std::invalid_argument("grid_search_cv: empty grid");
  if (folds.size() != y.size() || x.size() != y.size()) {
    throw std::invalid_argument("grid_search_cv: inconsistent sizes");
  }
  const int k = *std::max_element(folds.begin(), folds.end()) + 1;
  GridResult result;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> oof(y.size(), 0.0);
    std::vector<double> per_fold;
    for (int f = 0; f < k; ++f) {
      Matrix xt;
      std::vector<double> yt;
      std::vector<double> truth, pred;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (folds[i] != f) {
          xt.push_back(x[i]);
          yt.push_back(y[i]);
        }
      }
      if (xt.empty()) continue;
      const auto model = fit(xt, yt, grid[g]);
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (folds[i] != f) continue;
        oof[i] = model.predict(x[i]);
        truth.push_back(y[i]);
        pred.push_back(oof[i]);
      }
      per_fold.push_back(truth.size() >= 2 ? ccc(truth, pred) : 0.0);
    }
    const double score = ccc(y, oof);
    result.ccc.push_back(score);
    result.fold_ccc.push_back(std::move(per_fold));
    result.predictions.push_back(std::move(oof));
    if (g == 0 || score > result.best_ccc) {
      result.best_ccc = score;
      result.best_index = g;
    }
  }
  result.best = grid[result.best_index];
  return result;
}

GridResult grid_search_cv(const Matrix& x, std::span<const double> y, std::span<const Hyperparams> grid,
                          int k, std::uint64_t seed) {
  const auto folds = kfold_split(y.size(), k, seed);
  return grid_search_cv(x, y, folds, grid);
}

}  // namespace convnarr::tree
