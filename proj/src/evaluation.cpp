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
#include "convnarr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "convnarr/rng.hpp"

namespace convnarr {

namespace {

struct Moments {
  double mean_x = 0, mean_y = 0, var_x = 0, var_y = 0, cov = 0;
};

Moments moments(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("length mismatch: " + std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()));
  }
  if (x.size() < 2) throw std::invalid_argument("need at least 2 observations");
  const double n = static_cast<double>(x.size());
  Moments m;
  m.mean_x = std::accumulate(x.begin(), x.end(), 0.0) / n;
  m.mean_y = std::accumulate(y.begin(), y.end(), 0.0) / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - m.mean_x;
    const double dy = y[i] - m.mean_y;
    m.var_x += dx * dx;
    m.var_y += dy * dy;
    m.cov += dx * dy;
  }
  m.var_x /= n;
  m.var_y /= n;
  m.cov /= n;
  return m;
}

}  // namespace

double pcc(std::span<const double> x, std::span<const double> y) {
  const auto m = moments(x, y);
  if (!(m.var_x > 0.0) || !(m.var_y > 0.0)) return 0.0;
  return std::clamp(m.cov / std::sqrt(m.var_x * m.var_y), -1.0, 1.0);
}

double ccc(std::span<const double> truth, std::span<const double> prediction) {
  const auto m = moments(truth, prediction);
  const double d = m.mean_x - m.mean_y;
  const double denom = m.var_x + m.var_y + d * d;
  if (denom == 0.0) return 1.0;
  return 2.0 * m.cov / denom;
}

std::vector<int> kfold_split(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2 || static_cast<std::size_t>(k) > n) {
    throw std::invalid_argument("k must satisfy 2 <= k <= " + std::to_string(n) + ", got " +
                                std::to_string(k));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<int> fold(n);
  for (std::size_t i = 0; i < n; ++i) fold[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  return fold;
}

double percentile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("percentile of empty data");
  const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BootstrapResult bootstrap_ccc_diff(const PredictionSet& a, const PredictionSet& b, int n_resamples,
                                   std::span<const double> levels, std::uint64_t seed) {
  if (a.size() != b.size()) throw std::invalid_argument("bootstrap: prediction sets differ in size");
  if (n_resamples < 1) throw std::invalid_argument("bootstrap: need at least one resample");
  std::vector<double> truth, pa, pb;
  for (const auto& [id, pred] : a) {
    const auto it = b.find(id);
    if (it == b.end()) throw std::invalid_argument("bootstrap: session '" + id + "' missing from second set");
    if (it->second.truth != pred.truth) {
      throw std::invalid_argument("bootstrap: sets disagree on the truth of '" + id + "'");
    }
    truth.push_back(pred.truth);
    pa.push_back(pred.predicted);
    pb.push_back(it->second.predicted);
  }
  BootstrapResult result;
  result.observed_diff = ccc(truth, pa) - ccc(truth, pb);

  const std::size_t n = truth.size();
  Rng rng(seed);
  std::vector<double> diffs;
  diffs.reserve(static_cast<std::size_t>(n_resamples));
  std::vector<double> t(n), xa(n), xb(n);
  for (int r = 0; r < n_resamples; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(rng.below(n));
      t[i] = truth[j];
      xa[i] = pa[j];
      xb[i] = pb[j];
    }
    diffs.push_back(ccc(t, xa) - ccc(t, xb));
  }
  std::sort(diffs.begin(), diffs.end());
  for (double level : levels) {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap: level must be in (0, 1)");
    BootstrapInterval iv;
    iv.level = level;
    const double tail = (1.0 - level) / 2.0 * 100.0;
    iv.lower = percentile(diffs, tail);
    iv.upper = percentile(diffs, 100.0 - tail);
    iv.significant = iv.lower > 0.0 || iv.upper < 0.0;
    result.intervals.push_back(iv);
  }
  return result;
}

}  // namespace convnarr
