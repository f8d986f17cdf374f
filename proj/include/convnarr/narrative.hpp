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
#ifndef CONVNARR_NARRATIVE_HPP
#define CONVNARR_NARRATIVE_HPP

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convnarr/clients.hpp"
#include "convnarr/corpus.hpp"
#include "convnarr/features.hpp"

namespace convnarr {

enum class TurnKind { SummaryLine, Question, Answer, Utterance };

struct NarrativeTurn {
  TurnKind kind = TurnKind::Utterance;
  std::string text;

  friend bool operator==(const NarrativeTurn&, const NarrativeTurn&) = default;
};

struct NarrativeDocument {
  std::vector<NarrativeTurn> turns;

  void append(const NarrativeDocument& other) {
    turns.insert(turns.end(), other.turns.begin(), other.turns.end());
  }
  friend bool operator==(const NarrativeDocument&, const NarrativeDocument&) = default;
};

char kind_tag(TurnKind kind);

/// One line per turn: "<tag>|<text>\n" with tags S, Q, A, U. Backslashes and
/// newlines inside text are escaped as \\ and \n.
std::string serialize_narrative(const NarrativeDocument& doc);
NarrativeDocument parse_narrative(std::string_view text);

/// Per-feature population mean/std from a training fold.
class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(std::vector<std::string> names, std::vector<double> mean, std::vector<double> std);

  std::span<const std::string> names() const { return names_; }
  std::span<const double> means() const { return mean_; }
  std::span<const double> stds() const { return std_; }
  bool zero_variance(std::size_t i) const { return !(std_[i] > 0.0); }
  std::size_t index_of(std::string_view name) const;

  // nullopt for zero-variance features.
  std::optional<double> z(std::size_t i, double value) const;
  std::optional<double> z(std::string_view name, double value) const { return z(index_of(name), value); }

  std::string to_json() const;
  static Standardizer from_json(std::string_view json);
  static Standardizer load(const std::filesystem::path& path);

  friend bool operator==(const Standardizer&, const Standardizer&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<double> mean_;
  std::vector<double> std_;
};

/// Fits over every session-level column (all three families). Needs >= 2 sessions.
Standardizer fit_standardizer(std::span<const SessionFeatures> training);

enum class Qualifier { VeryLow, Low, Normal, High, VeryHigh };

/// Strict thresholds: z < -2 very low, z < -1 low, z > 1 high, z > 2 very high.
Qualifier z_bucket(double z);
std::string_view qualifier_text(Qualifier q);

/// Coarse summary lines (templates 1-7) for the requested families, in
/// demographics, actions, prosody order. Normal-range features are omitted;
/// the gender sentence is always emitted when demographics are requested.
NarrativeDocument coarse_summary(const SessionFeatures& f, const Standardizer& standardizer,
                                 std::span<const Family> families);

extern const std::array<std::string_view, 4> kHabitQuestions;
extern const std::array<std::string_view, 5> kSymptomQuestions;
std::vector<std::string> default_questions();

inline constexpr double kAnswerThreshold = 0.1;
inline constexpr std::string_view kNotApplicable = "not applicable";

/// Question/Answer pairs over the participant's turns. Answers below the
/// probability threshold, and failed client calls, become "not applicable".
NarrativeDocument comprehension_block(const Session& s, std::span<const std::string> questions,
                                      const ComprehensionClient& client);

/// Rounds to the nearest hundred milliseconds and spells the result in
/// English cardinal words; empty when it rounds to zero.
std::string number_to_words(Millis ms);
std::string cardinal_words(std::uint64_t n);

/// "a long delay" for 1 <= z < 2, "a significantly long delay" for z >= 2.
std::optional<std::string_view> delay_qualifier(double z);
/// Most extreme strict bucket: very slowly / slowly / quickly / very quickly.
std::optional<std::string_view> rate_adverb(double z);

/// Words per minute of one turn; nullopt for zero-length turns.
std::optional<double> turn_rate_wpm(const TalkTurn& t);

struct MomentPair {
  double mean = 0.0;
  double std = 0.0;
  std::optional<double> z(double v) const {
    if (!(std > 0.0)) return std::nullopt;
    return (v - mean) / std;
  }
};

/// Within-session statistics behind the delay and speech-rate annotations.
struct WithinSessionStats {
  MomentPair delay;
  MomentPair rate;
};

WithinSessionStats within_session_stats(const Session& s);

bool laughter_within(const LaughterEvent& e, const TalkTurn& t);

/// One Utterance per transcript turn:
///   [after <n> milliseconds] [delay qualifier] the participant [laughed and] [adverb] said <text>
///   the interviewer said <text>
NarrativeDocument weave_narrative(const Session& s, const WithinSessionStats& stats);
NarrativeDocument weave_narrative(const Session& s);

enum class InputConfig { D, DA, DAP, DAPC, DAPN, DAPNC };

inline constexpr std::array<InputConfig, 6> kAllConfigs = {
    InputConfig::D, InputConfig::DA, InputConfig::DAP, InputConfig::DAPC, InputConfig::DAPN,
    InputConfig::DAPNC};

std::string_view to_string(InputConfig c);
InputConfig parse_input_config(std::string_view name);
std::vector<Family> config_families(InputConfig c);
bool config_has_comprehension(InputConfig c);
bool config_has_narrative(InputConfig c);
bool config_is_numeric(InputConfig c);  // D, DA, DAP

struct NarrativeContext {
  const Standardizer* standardizer = nullptr;
  const ComprehensionClient* comprehension = nullptr;
  std::vector<std::string> questions = default_questions();
};

/// Summary for the config's families, then the QA block (C), then the woven
/// transcript (N).
NarrativeDocument assemble_input(const Session& s, const SessionFeatures& f, InputConfig config,
                                 const NarrativeContext& ctx);

}  // namespace convnarr

#endif  // CONVNARR_NARRATIVE_HPP
