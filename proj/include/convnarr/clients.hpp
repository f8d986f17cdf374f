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
#ifndef CONVNARR_CLIENTS_HPP
#define CONVNARR_CLIENTS_HPP

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

// Boundaries to the external services the pipeline consumes: a personality
// percentile service, an extractive machine-comprehension model and a word
// embedding table. Each service has an offline deterministic stub and an
// HTTP/JSON remote client.

namespace convnarr {

inline constexpr std::size_t kTraitCount = 5;
inline constexpr std::array<std::string_view, kTraitCount> kTraitNames = {
    "openness", "conscientiousness", "extraversion", "agreeableness", "neuroticism"};

struct PersonalityResult {
  std::array<double, kTraitCount> percentiles{50, 50, 50, 50, 50};
};

struct ComprehensionAnswer {
  std::string answer;
  double probability = 0.0;
};

/// Transport-level failure of a remote client. Safe to retry.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PersonalityClient {
 public:
  virtual ~PersonalityClient() = default;
  virtual PersonalityResult personality(std::string_view text) const = 0;
};

class ComprehensionClient {
 public:
  virtual ~ComprehensionClient() = default;
  virtual ComprehensionAnswer comprehend(std::string_view question, std::string_view passage) const = 0;
};

struct TraitLexicon {
  std::vector<std::string> raises;
  std::vector<std::string> lowers;
};

struct PersonalityLexicons {
  std::array<TraitLexicon, kTraitCount> traits;
  // Percentile points per lexicon hit per 100 tokens.
  double gain = 10.0;

  static PersonalityLexicons defaults();
  // JSON object: {"gain": 10, "openness": {"raises": [...], "lowers": [...]}, ...}
  static PersonalityLexicons load(const std::filesystem::path& path);
};

/// Scores each trait as 50 + gain * 100 * (raises - lowers) / tokens, clamped
/// to [0, 100]. Empty text scores 50 everywhere.
class StubPersonalityClient final : public PersonalityClient {
 public:
  explicit StubPersonalityClient(PersonalityLexicons lexicons = PersonalityLexicons::defaults());
  PersonalityResult personality(std::string_view text) const override;

 private:
  PersonalityLexicons lexicons_;
  std::array<std::unordered_set<std::string>, kTraitCount> raises_;
  std::array<std::unordered_set<std::string>, kTraitCount> lowers_;
};

const std::unordered_set<std::string>& stop_words();
std::vector<std::string> content_words(std::string_view text);

/// Splits a passage on '.', '?', '!' and newlines (talk-turn boundaries).
/// Each sentence is returned trimmed, as a view into the passage.
std::vector<std::string_view> split_sentences(std::string_view passage);

/// Returns the passage sentence with the largest content-word overlap with the
/// question; probability is overlap / |question content words|. Ties go to
/// the earliest sentence.
class StubComprehensionClient final : public ComprehensionClient {
 public:
  ComprehensionAnswer comprehend(std::string_view question, std::string_view passage) const override;
};

struct RemoteOptions {
  std::string url;  // e.g. http://localhost:8080/v1/personality
  std::string api_key;
  std::chrono::milliseconds timeout{10000};
  int retries = 2;
};

// Environment: CONVNARR_PERSONALITY_URL, CONVNARR_COMPREHENSION_URL,
// CONVNARR_API_KEY. Throws std::runtime_error when the URL variable is unset.
RemoteOptions remote_options_from_env(std::string_view url_variable);

/// POST {"text": ...} -> {"openness": p, ..., "neuroticism": p}
class RemotePersonalityClient final : public PersonalityClient {
 public:
  explicit RemotePersonalityClient(RemoteOptions options);
  PersonalityResult personality(std::string_view text) const override;

 private:
  RemoteOptions options_;
};

/// POST {"question": ..., "passage": ...} -> {"answer": ..., "probability": p}
class RemoteComprehensionClient final : public ComprehensionClient {
 public:
  explicit RemoteComprehensionClient(RemoteOptions options);
  ComprehensionAnswer comprehend(std::string_view question, std::string_view passage) const override;

 private:
  RemoteOptions options_;
};

/// Word vectors. Either loaded from a word-per-line text file, or "hashed":
/// every token maps to a seeded pseudo-random vector derived from its bytes,
/// which stands in for pretrained vectors when none are available.
class EmbeddingTable {
 public:
  enum class Kind { File, Hashed };

  static EmbeddingTable load(const std::filesystem::path& path, std::uint64_t oov_seed = 0);
  static EmbeddingTable hashed(std::size_t dimension, std::uint64_t seed, double scale = 1.0);

  Kind kind() const { return kind_; }
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return vectors_.size(); }
  std::uint64_t seed() const { return seed_; }
  double scale() const { return scale_; }
  const std::filesystem::path& source() const { return source_; }

  bool contains(std::string_view token) const;
  // Writes the vector for `token` into `out` (size dimension()).
  void lookup(std::string_view token, std::span<double> out) const;
  std::span<const double> oov_vector() const { return oov_; }

 private:
  Kind kind_ = Kind::File;
  std::size_t dimension_ = 0;
  std::uint64_t seed_ = 0;
  double scale_ = 0.0;
  std::filesystem::path source_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<double>> vectors_;
  std::vector<double> oov_;
};

}  // namespace convnarr

#endif  // CONVNARR_CLIENTS_HPP
