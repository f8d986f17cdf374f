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
#ifndef CONVNARR_TESTS_TREE_ORACLE_HPP
#define CONVNARR_TESTS_TREE_ORACLE_HPP

// Exhaustive reference for the regression tree. Everything here is computed
// naively (two-pass SSE over explicit row lists, every feature and every
// midpoint tried) so it shares no code with the fitted implementation.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "convnarr/csv.hpp"
#include "convnarr/tree.hpp"

namespace convnarr::testing {

struct TreeDataset {
  std::string name;
  tree::Matrix x;
  std::vector<double> y;
};

// Last column is the target.
inline TreeDataset load_tree_dataset(const std::filesystem::path& path) {
  const auto table = csv::read_file(path);
  TreeDataset d;
  d.name = path.filename().string();
  for (const auto& row : table.rows) {
    std::vector<double> v;
    for (const auto& f : row.fields) v.push_back(std::stod(f));
    d.y.push_back(v.back());
    v.pop_back();
    d.x.push_back(std::move(v));
  }
  return d;
}

inline std::vector<TreeDataset> load_tree_datasets(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<TreeDataset> out;
  for (const auto& f : files) out.push_back(load_tree_dataset(f));
  return out;
}

using Rows = std::vector<std::size_t>;

inline double naive_sse(const std::vector<double>& y, const Rows& rows) {
  if (rows.empty()) return 0.0;
  double mean = 0.0;
  for (auto i : rows) mean += y[i];
  mean /= static_cast<double>(rows.size());
  double s = 0.0;
  for (auto i : rows) s += (y[i] - mean) * (y[i] - mean);
  return s;
}

inline double naive_mean(const std::vector<double>& y, const Rows& rows) {
  double mean = 0.0;
  for (auto i : rows) mean += y[i];
  return mean / static_cast<double>(rows.size());
}

struct Candidate {
  int feature;
  double threshold;
  double reduction;
  Rows left, right;
};

// Every axis-aligned split of `rows` in (feature, threshold) order.
inline std::vector<Candidate> all_splits(const TreeDataset& d, const Rows& rows) {
  std::vector<Candidate> out;
  if (rows.empty()) return out;
  const double parent = naive_sse(d.y, rows);
  for (std::size_t f = 0; f < d.x.front().size(); ++f) {
    std::set<double> values;
    for (auto i : rows) values.insert(d.x[i][f]);
    for (auto it = values.begin(); std::next(it) != values.end(); ++it) {
      const double t = (*it + *std::next(it)) / 2.0;
      Candidate c{static_cast<int>(f), t, 0.0, {}, {}};
      for (auto i : rows) (d.x[i][f] <= t ? c.left : c.right).push_back(i);
      c.reduction = parent - naive_sse(d.y, c.left) - naive_sse(d.y, c.right);
      out.push_back(std::move(c));
    }
  }
  return out;
}

inline bool better(double a, double b) { return a > b + 1e-9 * std::max(1.0, std::abs(b)); }

struct SplitRules {
  tree::Hyperparams hp;
  double root_sse;

  bool may_split(const Rows& rows, int depth) const {
    return depth < hp.maxdepth && static_cast<int>(rows.size()) >= hp.minsplit && root_sse > 0.0;
  }
  bool admissible(const Candidate& c) const {
    return c.reduction > 1e-9 * std::max(1.0, root_sse) && c.reduction / root_sse > hp.cp;
  }
};

struct OracleNode {
  bool leaf = true;
  double prediction = 0.0;
  int feature = -1;
  double threshold = 0.0;
  std::shared_ptr<const OracleNode> left, right;
  double sse = 0.0;  // total leaf SSE of this subtree
  std::size_t n = 0;
};
using OracleTree = std::shared_ptr<const OracleNode>;

inline OracleTree make_leaf(const TreeDataset& d, const Rows& rows) {
  auto n = std::make_shared<OracleNode>();
  n->prediction = naive_mean(d.y, rows);
  n->sse = naive_sse(d.y, rows);
  n->n = rows.size();
  return n;
}

// The split a greedy tree must take at this node, if any: the largest
// reduction, earliest (feature, threshold) on ties, then the stop rules.
inline const Candidate* greedy_choice(const std::vector<Candidate>& cands, const SplitRules& rules,
                                      const Rows& rows, int depth) {
  if (!rules.may_split(rows, depth)) return nullptr;
  const Candidate* best = nullptr;
  for (const auto& c : cands) {
    if (!best || better(c.reduction, best->reduction)) best = &c;
  }
  return best && rules.admissible(*best) ? best : nullptr;
}

// Every tree whose splits are each individually admissible under the rules.
inline std::vector<OracleTree> enumerate_trees(const TreeDataset& d, const SplitRules& rules,
                                               const Rows& rows, int depth) {
  std::vector<OracleTree> out{make_leaf(d, rows)};
  if (!rules.may_split(rows, depth)) return out;
  for (const auto& c : all_splits(d, rows)) {
    if (!rules.admissible(c)) continue;
    const auto ls = enumerate_trees(d, rules, c.left, depth + 1);
    const auto rs = enumerate_trees(d, rules, c.right, depth + 1);
    for (const auto& l : ls) {
      for (const auto& r : rs) {
        auto n = std::make_shared<OracleNode>();
        n->leaf = false;
        n->feature = c.feature;
        n->threshold = c.threshold;
        n->prediction = naive_mean(d.y, rows);
        n->left = l;
        n->right = r;
        n->sse = l->sse + r->sse;
        n->n = rows.size();
        out.push_back(std::move(n));
      }
    }
  }
  return out;
}

// Number of trees enumerate_trees would produce, without building them.
inline double count_trees(const TreeDataset& d, const SplitRules& rules, const Rows& rows, int depth) {
  double total = 1.0;
  if (!rules.may_split(rows, depth)) return total;
  for (const auto& c : all_splits(d, rows)) {
    if (!rules.admissible(c)) continue;
    total += count_trees(d, rules, c.left, depth + 1) * count_trees(d, rules, c.right, depth + 1);
    if (total > 1e12) return total;
  }
  return total;
}

// True when every node of `t` takes exactly the greedy split (or stops where
// the greedy rule stops).
inline bool greedy_consistent(const TreeDataset& d, const SplitRules& rules, const OracleNode& t,
                              const Rows& rows, int depth) {
  const auto cands = all_splits(d, rows);
  const Candidate* want = greedy_choice(cands, rules, rows, depth);
  if (t.leaf) return want == nullptr;
  if (!want || want->feature != t.feature || want->threshold != t.threshold) return false;
  return greedy_consistent(d, rules, *t.left, want->left, depth + 1) &&
         greedy_consistent(d, rules, *t.right, want->right, depth + 1);
}

// Minimum total leaf SSE over all admissible trees.
inline double min_sse(const TreeDataset& d, const SplitRules& rules, const Rows& rows, int depth) {
  double best = naive_sse(d.y, rows);
  if (!rules.may_split(rows, depth)) return best;
  for (const auto& c : all_splits(d, rows)) {
    if (!rules.admissible(c)) continue;
    best = std::min(best, min_sse(d, rules, c.left, depth + 1) + min_sse(d, rules, c.right, depth + 1));
  }
  return best;
}

struct OracleResult {
  double trees = 0;          // admissible trees considered
  bool enumerated = false;   // false when the space was too large to list
  std::size_t greedy_matches = 0;
  OracleTree greedy;         // the greedy-consistent tree
  double min_sse = 0.0;
};

inline OracleResult tree_oracle(const TreeDataset& d, const tree::Hyperparams& hp, double max_trees = 3e5) {
  Rows all(d.y.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const SplitRules rules{hp, naive_sse(d.y, all)};
  OracleResult r;
  r.trees = count_trees(d, rules, all, 0);
  r.min_sse = min_sse(d, rules, all, 0);
  if (r.trees <= max_trees) {
    r.enumerated = true;
    for (const auto& t : enumerate_trees(d, rules, all, 0)) {
      if (greedy_consistent(d, rules, *t, all, 0)) {
        ++r.greedy_matches;
        r.greedy = t;
      }
    }
  } else {
    // Too many trees to list: walk the greedy path directly.
    std::function<OracleTree(const Rows&, int)> walk = [&](const Rows& rows, int depth) -> OracleTree {
      const auto cands = all_splits(d, rows);
      const Candidate* c = greedy_choice(cands, rules, rows, depth);
      if (!c) return make_leaf(d, rows);
      auto n = std::make_shared<OracleNode>();
      n->leaf = false;
      n->feature = c->feature;
      n->threshold = c->threshold;
      n->prediction = naive_mean(d.y, rows);
      n->left = walk(c->left, depth + 1);
      n->right = walk(c->right, depth + 1);
      n->sse = n->left->sse + n->right->sse;
      n->n = rows.size();
      return n;
    };
    r.greedy = walk(all, 0);
    r.greedy_matches = 1;
  }
  return r;
}

// Structural equality between a fitted tree and an oracle tree.
inline bool same_tree(const tree::TreeModel& m, int id, const OracleNode& o) {
  const auto& n = m.nodes()[static_cast<std::size_t>(id)];
  if (n.leaf != o.leaf || n.n != o.n) return false;
  if (std::abs(n.prediction - o.prediction) > 1e-9 * std::max(1.0, std::abs(o.prediction))) return false;
  if (n.leaf) return true;
  return n.feature == o.feature && std::abs(n.threshold - o.threshold) <= 1e-12 * std::max(1.0, std::abs(o.threshold)) &&
         same_tree(m, n.left, *o.left) && same_tree(m, n.right, *o.right);
}

inline double training_sse(const tree::TreeModel& m, const TreeDataset& d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    const double e = m.predict(d.x[i]) - d.y[i];
    s += e * e;
  }
  return s;
}

inline std::vector<tree::Hyperparams> oracle_grid() {
  std::vector<tree::Hyperparams> grid;
  for (int minsplit : {2, 3, 5}) {
    for (int maxdepth : {1, 2, 3}) {
      for (double cp : {0.0, 0.01, 0.1, 0.3}) grid.push_back({minsplit, maxdepth, cp});
    }
  }
  return grid;
}

}  // namespace convnarr::testing

#endif  // CONVNARR_TESTS_TREE_ORACLE_HPP
