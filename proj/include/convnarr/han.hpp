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
#ifndef CONVNARR_HAN_HPP
#define CONVNARR_HAN_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "convnarr/clients.hpp"
#include "convnarr/narrative.hpp"

// Hierarchical attention network regressor.
//
//   words of turn j --GRU--> h_jt --attention--> turn vector v_j
//   v_1..v_J       --GRU--> g_j  --attention--> document vector d
//   score = w . d + b
//
// Attention: u_t = tanh(A h_t + a), alpha = softmax(c . u_t), pooled = sum alpha_t h_t.
// GRU: z = sig(Wz x + Uz h~ + bz), r = sig(Wr x + Ur h~ + br),
//      n = tanh(Wn x + Un (r * h~) + bn), h' = (1 - z) h + z n,
// where h~ = h * recurrent-dropout mask and x carries the input-dropout mask.
// Everything is double precision; embeddings are frozen inputs.

namespace convnarr::han {

struct HanConfig {
  std::size_t embedding_dim = 300;
  std::size_t gru_units = 50;
  double learning_rate = 0.01;
  double gru_dropout = 0.0;        // dropout on GRU inputs
  double recurrent_dropout = 0.0;  // dropout on the hidden-to-hidden path
  double l2 = 0.0;
  std::size_t batch_size = 8;
  int epochs = 350;
  std::uint64_t seed = 0;
  bool bidirectional = false;
  std::size_t max_turns = 200;
  std::size_t max_words = 100;
  // Global gradient-norm clip; 0 disables.
  double clip_norm = 0.0;

  void check() const;
  friend bool operator==(const HanConfig&, const HanConfig&) = default;
};

/// Word vectors for each kept turn of one document.
struct EncodedDoc {
  std::size_t dim = 0;
  std::vector<std::vector<std::string>> tokens;  // per kept turn
  std::vector<std::vector<double>> vectors;      // per kept turn, tokens x dim row-major
  std::vector<std::size_t> source_turn;          // index into the narrative's turns

  std::size_t turn_count() const { return vectors.size(); }
};

/// Tokenizes every turn, drops empty turns, keeps the first max_turns turns
/// and the first max_words words of each; unknown words get the table's OOV
/// vector. Throws when nothing is left.
EncodedDoc encode(const NarrativeDocument& doc, const EmbeddingTable& embeddings, std::size_t max_turns = 200,
                  std::size_t max_words = 100);

struct AttentionTrace {
  std::vector<double> turn_weights;
  std::vector<std::vector<double>> word_weights;
};

/// Offsets of each parameter block inside the flat parameter vector.
struct Layout {
  struct Gru {
    std::size_t input = 0, hidden = 0;
    std::size_t w = 0, u = 0, b = 0;  // W: 3H x I, U: 3H x H, b: 3H (gates z, r, n)
  };
  struct Attention {
    std::size_t input = 0, dim = 0;
    std::size_t a = 0, bias = 0, context = 0;  // A: dim x input
  };
  Gru word_fwd, word_bwd, turn_fwd, turn_bwd;
  Attention word_att, turn_att;
  std::size_t out_w = 0, out_b = 0;
  std::size_t total = 0;
  bool bidirectional = false;

  static Layout make(std::size_t embedding_dim, std::size_t units, bool bidirectional);
  // true for entries that carry the L2 penalty (everything except biases)
  std::vector<bool> weight_mask() const;
};

struct EmbeddingSpec {
  std::string kind = "hashed";  // "hashed" or "file"
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  double scale = 1.0;
  std::string path;

  static EmbeddingSpec describe(const EmbeddingTable& table);
  EmbeddingTable materialize() const;
};

struct HanModel {
  HanConfig config;
  Layout layout;
  EmbeddingSpec embeddings;
  std::vector<double> params;

  /// Seeded uniform init scaled by fan-in; biases zero, output bias set to
  /// `output_bias`.
  static HanModel init(const HanConfig& config, double output_bias = 0.0);
};

struct ForwardResult {
  double raw = 0.0;
  AttentionTrace trace;
};

/// Dropout is applied only when `training` is set, with masks drawn from
/// `mask_seed`.
ForwardResult forward(const HanModel& model, const EncodedDoc& doc, bool training = false,
                      std::uint64_t mask_seed = 0);

double clip_prediction(double raw);
/// Clipped score in [0, 24].
double predict(const HanModel& model, const EncodedDoc& doc);

namespace detail {
enum class Fault { None, FlipAttentionContextSign };
}

/// Squared error of the raw output plus l2 * sum of squared weights.
/// Accumulates d(loss)/d(params) * scale into `grad`.
double loss_and_gradient(const HanModel& model, const EncodedDoc& doc, double label, std::span<double> grad,
                         double scale = 1.0, bool training = false, std::uint64_t mask_seed = 0,
                         detail::Fault fault = detail::Fault::None);

struct TrainResult {
  HanModel model;
  std::vector<double> loss_history;  // mean batch loss per epoch
};

/// Mini-batch SGD on mean squared error + l2 penalty. The output bias starts
/// at the mean training label. Shuffling and dropout masks derive from
/// config.seed, so results are bitwise reproducible on a given kernel ISA.
TrainResult train(std::span<const EncodedDoc> docs, std::span<const double> labels, const HanConfig& config,
                  const EmbeddingSpec& embeddings = {});

struct GradientCheckOptions {
  double epsilon = 1e-3;  // step of the five-point central difference
  std::size_t max_params = 400;  // random subset size; all when larger than the model
  std::uint64_t seed = 0;
  detail::Fault fault = detail::Fault::None;
};

/// Max relative error |a - n| / max(|a| + |n|, 1e-6) between analytic and
/// five-point central-difference gradients over a random parameter subset.
/// Dropout off.
double gradient_check(const HanModel& model, const EncodedDoc& doc, double label,
                      const GradientCheckOptions& opt = {});

struct SearchSpace {
  double lr_min = 1e-3, lr_max = 1e-1;  // log-uniform
  std::vector<std::size_t> gru_units = {8, 16, 32};
  double gru_dropout_max = 0.5;
  double recurrent_dropout_max = 0.5;
  double l2_min = 1e-6, l2_max = 1e-2;  // log-uniform
};

struct SearchTrial {
  HanConfig config;
  double score = 0.0;
};

struct SearchResult {
  std::size_t best_index = 0;
  HanConfig best;
  std::vector<SearchTrial> trials;
};

std::vector<HanConfig> sample_configs(const SearchSpace& space, const HanConfig& base, int budget,
                                      std::uint64_t seed);

/// Scores `budget` sampled configs with `evaluate`; best score wins, ties go
/// to the earliest sample.
SearchResult random_search(const SearchSpace& space, const HanConfig& base, int budget, std::uint64_t seed,
                           const std::function<double(const HanConfig&)>& evaluate);

/// Out-of-fold clipped predictions for fixed documents. folds[i] is the
/// held-out fold of document i.
std::vector<double> cross_validate(std::span<const EncodedDoc> docs, std::span<const double> labels,
                                   std::span<const int> folds, const HanConfig& config);

/// random_search scored by pooled out-of-fold CCC over k seeded folds.
SearchResult random_search(const SearchSpace& space, const HanConfig& base, int budget, int k,
                           std::uint64_t seed, std::span<const EncodedDoc> docs, std::span<const double> labels);

// Checkpoint: 8-byte magic "CNVHAN\0\0", uint32 format version, uint64 header
// length, JSON header (config, layout shapes, embeddings, parameter count),
// then the parameters as little-endian IEEE-754 doubles.
inline constexpr std::uint32_t kCheckpointVersion = 1;
void save_checkpoint(const HanModel& model, const std::filesystem::path& path);
HanModel load_checkpoint(const std::filesystem::path& path);
std::string checkpoint_bytes(const HanModel& model);

std::string trace_to_json(const AttentionTrace& trace, const EncodedDoc& doc);

}  // namespace convnarr::han

#endif  // CONVNARR_HAN_HPP
