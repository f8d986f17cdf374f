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
#ifndef CONVNARR_FEATURES_HPP
#define CONVNARR_FEATURES_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "convnarr/clients.hpp"
#include "convnarr/corpus.hpp"

namespace convnarr {

/// Population summary statistics (variance divides by n).
struct SummaryStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;
};

/// nullopt for an empty series; callers substitute zeros.
std::optional<SummaryStats> summary_stats(std::span<const double> series);
SummaryStats summary_stats_or_zero(std::span<const double> series);

struct AuStats {
  SummaryStats intensity;
  std::size_t presence_count = 0;
};

struct Talkativeness {
  std::size_t total_words = 0;
  std::size_t distinct_words = 0;
};

enum class Family { Demographics, Actions, Prosody };

struct SessionFeatures {
  std::size_t total_words = 0;
  std::size_t distinct_words = 0;
  std::array<double, kTraitCount> big5{50, 50, 50, 50, 50};
  Gender gender = Gender::Female;
  std::size_t laughter_count = 0;
  std::array<AuStats, kAuCount> au{};
  SummaryStats delay;
  double speech_rate_wpm = 0.0;

  std::array<double, 2> gender_onehot() const {
    return gender == Gender::Female ? std::array<double, 2>{1, 0} : std::array<double, 2>{0, 1};
  }
};

// Design-matrix columns, in order:
//   demographics (9): total_words, distinct_words, openness, conscientiousness,
//     extraversion, agreeableness, neuroticism, gender_female, gender_male
//   actions (21): laughter_count, then per AU (au5, au17, au20, au25):
//     <au>_min, <au>_max, <au>_mean, <au>_std, <au>_count
//   prosody (5): delay_min, delay_max, delay_mean, delay_std, speech_rate
std::vector<std::string> feature_names(std::span<const Family> families);
std::vector<double> feature_vector(const SessionFeatures& f, std::span<const Family> families);
std::span<const Family> all_families();

Talkativeness talkativeness(const Session& s);
std::size_t laughter_count(const Session& s);
std::array<AuStats, kAuCount> au_summary(const Session& s);

/// Response latency per turn: set only for participant turns directly preceded
/// by an interviewer turn, as max(0, start - previous end).
std::vector<std::optional<Millis>> turn_delays(const Session& s);
std::vector<Millis> delay_sequence(const Session& s);

/// Participant words per minute of participant talk-turn time. Zero when the
/// participant has no talk time (a warning is logged).
double avg_speech_rate(const Session& s);

/// Participant turns joined by newlines (newlines mark turn boundaries).
std::string participant_text(const Session& s);

struct GenderModel {
  std::array<double, kEgemapsCount> weights{};
  double bias = 0.0;
  std::array<double, kEgemapsCount> mean{};
  std::array<double, kEgemapsCount> scale{};  // std; 1 for zero-variance columns

  // Probability of the female class for one window.
  double female_probability(const std::array<double, kEgemapsCount>& row) const;
};

struct GenderTrainOptions {
  double l2 = 1e-2;
  double learning_rate = 0.5;
  int iterations = 500;
  std::uint64_t seed = 0;
};

/// L2-regularised logistic regression fitted by full-batch gradient descent on
/// standardised features, starting from zero weights. Full-batch updates make
/// the fit independent of row order up to rounding.
GenderModel train_gender_model(std::span<const std::array<double, kEgemapsCount>> rows,
                               std::span<const Gender> labels, const GenderTrainOptions& opt = {});

/// Window-level training rows from every session that carries a gender label.
GenderModel train_gender_model(std::span<const Session> sessions, const GenderTrainOptions& opt = {});

struct GenderPrediction {
  Gender gender = Gender::Female;
  double female_probability = 0.0;
};

/// Mean window probability; >= 0.5 is female.
GenderPrediction predict_gender(const GenderModel& model, const EgemapsTrack& egemaps);

/// Pooled k-fold accuracy of the window-level classifier.
double cross_validated_gender_accuracy(std::span<const std::array<double, kEgemapsCount>> rows,
                                       std::span<const Gender> labels, int k, std::uint64_t seed,
                                       const GenderTrainOptions& opt = {});

SessionFeatures assemble_features(const Session& s, const GenderModel& gender_model,
                                  const PersonalityClient& personality);

}  // namespace convnarr

#endif  // CONVNARR_FEATURES_HPP
