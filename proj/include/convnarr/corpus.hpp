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
#ifndef CONVNARR_CORPUS_HPP
#define CONVNARR_CORPUS_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace convnarr {

using Millis = std::int64_t;

enum class Speaker { Interviewer, Participant };
enum class Gender { Female, Male };

std::string_view to_string(Speaker s);
std::string_view to_string(Gender g);

/// Lowercase word tokens: whitespace split, punctuation stripped, apostrophes
/// kept when they sit inside a word ("don't"). Bytes >= 0x80 count as word
/// characters so UTF-8 text passes through untouched.
std::vector<std::string> tokenize(std::string_view text);

struct TalkTurn {
  Speaker speaker = Speaker::Participant;
  Millis start_ms = 0;
  Millis end_ms = 0;
  std::string text;
  std::vector<std::string> tokens;

  static TalkTurn make(Speaker speaker, Millis start_ms, Millis end_ms, std::string text);
  Millis duration_ms() const { return end_ms - start_ms; }
};

inline constexpr std::size_t kEgemapsCount = 16;
inline constexpr std::size_t kAuCount = 4;

/// The four facial action units tracked per frame, in column order.
inline constexpr std::array<std::string_view, kAuCount> kAuIds = {"au5", "au17", "au20", "au25"};
inline constexpr std::array<std::string_view, kAuCount> kAuNames = {
    "upper lid raiser", "chin raiser", "lip stretcher", "jaw drop"};

/// Default column names written for synthetic egemaps tracks.
extern const std::array<std::string_view, kEgemapsCount> kEgemapsDefaultColumns;

struct EgemapsTrack {
  std::array<std::string, kEgemapsCount> columns;
  std::vector<std::array<double, kEgemapsCount>> rows;
};

struct AuFrame {
  Millis frame_ms = 0;
  std::array<double, kAuCount> intensity{};
  std::array<int, kAuCount> presence{};
};

struct LaughterEvent {
  Millis start_ms = 0;
  Millis end_ms = 0;
};

struct Session {
  std::string id;
  std::vector<TalkTurn> turns;
  EgemapsTrack egemaps;
  std::vector<AuFrame> au_frames;
  std::vector<LaughterEvent> laughter_events;
  std::optional<int> phq;
  // Only used as a training label for the gender classifier.
  std::optional<Gender> gender;
};

struct Corpus {
  std::vector<Session> sessions;
  // Parallel to `sessions`; empty when the manifest carries no folds.
  std::vector<std::optional<int>> split_labels;

  const Session* find(std::string_view id) const;
};

inline constexpr int kPhqMin = 0;
inline constexpr int kPhqMax = 24;

/// Raised by the parser; the message names the offending file and line.
class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Session parse_session(const std::filesystem::path& dir, std::string id);
Corpus parse_corpus(const std::filesystem::path& root);

/// Writes the on-disk layout read by parse_corpus. The directory is created
/// if needed; existing session files are overwritten.
void write_corpus(const Corpus& corpus, const std::filesystem::path& root);

struct Violation {
  std::string session_id;
  std::string message;
};

std::vector<Violation> validate(const Corpus& corpus);

}  // namespace convnarr

#endif  // CONVNARR_CORPUS_HPP
