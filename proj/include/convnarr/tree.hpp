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
#ifndef CONVNARR_TREE_HPP
#define CONVNARR_TREE_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

// Least-squares ("anova") regression tree with a complexity-parameter stop
// rule, plus grid-search cross-validation over its hyperparameters.

namespace convnarr::tree {

using Matrix = std::vector<std::vector<double>>;  // rows of features

struct Hyperparams {
  int minsplit = 20;
  int maxdepth = 30;
  double cp = 0.01;

  void check() const;
  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

struct Split {
  double threshold = 0.0;
  double sse_reduction = 0.0;
};

/// Best threshold for one column: midpoints between adjacent distinct sorted
/// values, maximising SSE(parent) - SSE(left) - SSE(right). Ties keep the
/// smallest threshold. nullopt when the column has fewer than two distinct
/// values.
std::optional<Split> best_split(std::span<const double> column, std::span<const double> targets);

struct Node {
  bool leaf = true;
  double prediction = 0.0;  // mean of member targets
  std::size_t n = 0;
  double sse = 0.0;
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
};

class TreeModel {
 public:
  TreeModel() = default;
  TreeModel(std::vector<Node> nodes, std::size_t n_features, std::vector<std::string> feature_names = {});

  /// Descends with "go left iff value <= threshold". Throws when x is shorter
  /// than a feature index the tree tests.
  double predict(std::span<const double> x) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const;
  int depth() const;
  std::size_t n_features() const { return n_features_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  std::string to_json() const;
  static TreeModel from_json(std::string_view json);

 private:
  std::vector<Node> nodes_;  // root at index 0
  std::size_t n_features_ = 0;
  std::vector<std::string> feature_names_;
};

/// Greedy recursive partitioning. A node is split when it holds at least
/// `minsplit` rows, sits above `maxdepth`, and its best split (across all
/// features; ties go to the lower feature index) reduces SSE by more than
/// cp * SSE(root). cp = 1 therefore always gives a root-only tree.
TreeModel fit(const Matrix& x, std::span<const double> y, const Hyperparams& hp,
              std::vector<std::string> feature_names = {});

std::vector<Hyperparams> default_grid();

struct GridResult {
  std::size_t best_index = 0;
  Hyperparams best;
  double best_ccc = 0.0;
  std::vector<double> ccc;                      // per grid point
  std::vector<std::vector<double>> fold_ccc;    // per grid point, per fold
  std::vector<std::vector<double>> predictions; // per grid point, out-of-fold
};

/// Pooled out-of-fold CCC per grid point; best by CCC, ties to the earlier
/// point. `folds[i]` is the held-out fold of row i.
GridResult grid_search_cv(const Matrix& x, std::span<const double> y, std::span<const int> folds,
                          std::span<const Hyperparams> grid);
GridResult grid_search_cv(const Matrix& x, std::span<const double> y, std::span<const Hyperparams> grid,
                          int k, std::uint64_t seed);

}  // namespace convnarr::tree

#endif  // CONVNARR_TREE_HPP
