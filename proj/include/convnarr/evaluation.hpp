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
#ifndef CONVNARR_EVALUATION_HPP
#define CONVNARR_EVALUATION_HPP

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace convnarr {

/// Pearson correlation with population moments; 0 when either series is constant.
double pcc(std::span<const double> x, std::span<const double> y);

/// Concordance correlation coefficient,
///   2 cov(x, y) / (var(x) + var(y) + (mean(x) - mean(y))^2),
/// with population moments. Two identical constant vectors give 1 (the
/// denominator vanishes only when x == y elementwise).
double ccc(std::span<const double> truth, std::span<const double> prediction);

/// Seeded shuffle, then round-robin assignment. Returns the fold of each id.
std::vector<int> kfold_split(std::size_t n, int k, std::uint64_t seed);

struct Prediction {
  double truth = 0.0;
  double predicted = 0.0;
};

/// Per-session (truth, prediction) pairs keyed by session id.
using PredictionSet = std::map<std::string, Prediction>;

struct BootstrapInterval {
  double level = 0.95;
  double lower = 0.0;
  double upper = 0.0;
  bool significant = false;  // interval excludes 0
};

struct BootstrapResult {
  double observed_diff = 0.0;  // ccc(A) - ccc(B) on the full set
  std::vector<BootstrapInterval> intervals;
};

/// Paired bootstrap over session ids: resample with replacement, compute
/// ccc(A) - ccc(B) per resample, two-sided percentile interval per level.
BootstrapResult bootstrap_ccc_diff(const PredictionSet& a, const PredictionSet& b, int n_resamples,
                                   std::span<const double> levels, std::uint64_t seed);

/// Linear-interpolation percentile of sorted data, q in [0, 100].
double percentile(std::span<const double> sorted, double q);

}  // namespace convnarr

#endif  // CONVNARR_EVALUATION_HPP
