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
#ifndef CONVNARR_ABLATION_HPP
#define CONVNARR_ABLATION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "convnarr/clients.hpp"
#include "convnarr/corpus.hpp"
#include "convnarr/evaluation.hpp"
#include "convnarr/features.hpp"
#include "convnarr/han.hpp"
#include "convnarr/narrative.hpp"
#include "convnarr/tree.hpp"

namespace convnarr {

enum class ModelKind { Tree, Han };

std::string_view to_string(ModelKind m);
ModelKind parse_model_kind(std::string_view name);

struct AblationOptions {
  std::vector<InputConfig> configs{kAllConfigs.begin(), kAllConfigs.end()};
  std::vector<ModelKind> models = {ModelKind::Tree, ModelKind::Han};
  int k = 5;
  std::uint64_t seed = 0;
  std::vector<tree::Hyperparams> tree_grid = tree::default_grid();
  han::HanConfig han;
  GenderTrainOptions gender;
  std::vector<std::string> questions = default_questions();
  int bootstrap_resamples = 1000;
  std::vector<double> bootstrap_levels = {0.90, 0.95};
  std::size_t jobs = 1;

  // Required for HAN cells / feature extraction respectively.
  const EmbeddingTable* embeddings = nullptr;
  const PersonalityClient* personality = nullptr;
  const ComprehensionClient* comprehension = nullptr;
};

struct CellResult {
  ModelKind model = ModelKind::Tree;
  InputConfig config = InputConfig::D;
  bool available = false;  // false renders as N/A
  std::vector<double> fold_ccc;
  double mean_ccc = 0.0;
  double std_ccc = 0.0;  // population std over folds
  double pooled_ccc = 0.0;
  PredictionSet predictions;
  std::optional<tree::Hyperparams> tree_choice;

  std::string label() const;  // e.g. "HAN/DAPN"
};

struct PairComparison {
  std::string a, b;
  BootstrapResult result;
};

struct EvalReport {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::string>> held_out;  // session ids per fold
  std::vector<CellResult> cells;                   // every requested (config, model)
  std::vector<PairComparison> comparisons;         // every pair of available cells

  const CellResult* find(ModelKind m, InputConfig c) const;
  std::string to_json() const;
  std::string to_table() const;
};

bool tree_supports(InputConfig c);

/// k-fold ablation. Per fold the gender model, the standardizer, the tree and
/// the HAN are fitted on the training sessions only. Tree hyperparameters are
/// chosen by pooled out-of-fold CCC over `tree_grid`. Sessions without a PHQ
/// label are skipped.
EvalReport run_ablation(const Corpus& corpus, const AblationOptions& opt);

}  // namespace convnarr

#endif  // CONVNARR_ABLATION_HPP
