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
#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "convnarr/clients.hpp"
#include "convnarr/corpus.hpp"
#include "convnarr/rng.hpp"

namespace convnarr {

PersonalityLexicons PersonalityLexicons::defaults() {
  PersonalityLexicons lx;
  lx.traits[0] = {{"art", "music", "curious", "travel", "ideas", "creative", "imagine", "learn", "books",
                   "explore", "painting", "writing"},
                  {"routine", "boring", "same", "usual"}};
  lx.traits[1] = {{"work", "plan", "organized", "goal", "goals", "finish", "careful", "schedule", "job",
                   "responsible", "study"},
                  {"lazy", "procrastinate", "forget", "messy", "quit", "late"}};
  lx.traits[2] = {{"friends", "party", "people", "outgoing", "talk", "fun", "social", "laugh", "going"},
                  {"shy", "alone", "quiet", "withdrawn", "home", "myself"}};
  lx.traits[3] = {{"help", "kind", "family", "love", "care", "thank", "nice", "together", "sister",
                   "brother"},
                  {"angry", "hate", "irritated", "argue", "annoyed", "mad"}};
  lx.traits[4] = {{"worried", "anxious", "nervous", "stress", "stressed", "depressed", "sad", "tired",
                   "worthless", "cope", "afraid", "dying", "irritated"},
                  {"calm", "relaxed", "fine", "happy", "good", "great"}};
  return lx;
}

PersonalityLexicons PersonalityLexicons::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open personality lexicons " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  PersonalityLexicons lx;
  lx.gain = j.value("gain", lx.gain);
  for (std::size_t t = 0; t < kTraitCount; ++t) {
    const auto name = std::string(kTraitNames[t]);
    if (!j.contains(name)) throw std::runtime_error(path.string() + ": missing trait '" + name + "'");
    lx.traits[t].raises = j[name].value("raises", std::vector<std::string>{});
    lx.traits[t].lowers = j[name].value("lowers", std::vector<std::string>{});
  }
  return lx;
}

StubPersonalityClient::StubPersonalityClient(PersonalityLexicons lexicons)
    : lexicons_(std::move(lexicons)) {
  for (std::size_t t = 0; t < kTraitCount; ++t) {
    raises_[t].insert(lexicons_.traits[t].raises.begin(), lexicons_.traits[t].raises.end());
    lowers_[t].insert(lexicons_.traits[t].lowers.begin(), lexicons_.traits[t].lowers.end());
  }
}

PersonalityResult StubPersonalityClient::personality(std::string_view text) const {
  PersonalityResult result;
  const auto tokens = tokenize(text);
  if (tokens.empty()) return result;
  for (std::size_t t = 0; t < kTraitCount; ++t) {
    double net = 0.0;
    for (const auto& tok : tokens) {
      if (raises_[t].contains(tok)) net += 1.0;
      if (lowers_[t].contains(tok)) net -= 1.0;
    }
    const double p = 50.0 + lexicons_.gain * 100.0 * net / static_cast<double>(tokens.size());
    result.percentiles[t] = std::clamp(p, 0.0, 100.0);
  }
  return result;
}

const std::unordered_set<std::string>& stop_words() {
  static const std::unordered_set<std::string> words = {
      "a",     "about", "am",    "an",    "and",   "are",   "as",    "at",    "be",     "been",
      "being", "but",   "by",    "can",   "could", "did",   "do",    "does",  "doing",  "for",
      "from",  "had",   "has",   "have",  "having", "he",   "her",   "him",   "his",    "how",
      "i",     "i'm",   "i've",  "if",    "in",    "into",  "is",    "it",    "it's",   "its",
      "me",    "my",    "myself", "of",   "on",    "or",    "our",   "she",   "so",     "than",
      "that",  "the",   "their", "them",  "then",  "there", "these", "they",  "this",   "those",
      "to",    "too",   "uh",    "um",    "was",   "we",    "were",  "what",  "when",   "where",
      "which", "who",   "why",   "will",  "with",  "would", "you",   "your",  "yeah",   "just"};
  return words;
}

std::vector<std::string> content_words(std::string_view text) {
  std::vector<std::string> out;
  for (auto& tok : tokenize(text)) {
    if (!stop_words().contains(tok)) out.push_back(std::move(tok));
  }
  return out;
}

std::vector<std::string_view> split_sentences(std::string_view passage) {
  std::vector<std::string_view> out;
  auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  std::size_t begin = 0;
  for (std::size_t i = 0; i <= passage.size(); ++i) {
    if (i < passage.size() && passage[i] != '.' && passage[i] != '?' && passage[i] != '!' &&
        passage[i] != '\n') {
      continue;
    }
    std::size_t b = begin;
    std::size_t e = i;
    while (b < e && is_ws(passage[b])) ++b;
    while (e > b && is_ws(passage[e - 1])) --e;
    if (e > b) out.push_back(passage.substr(b, e - b));
    begin = i + 1;
  }
  return out;
}

ComprehensionAnswer StubComprehensionClient::comprehend(std::string_view question,
                                                        std::string_view passage) const {
  const auto q = content_words(question);
  const std::unordered_set<std::string> qset(q.begin(), q.end());
  if (qset.empty()) return {};
  ComprehensionAnswer best;
  std::size_t best_overlap = 0;
  for (auto sentence : split_sentences(passage)) {
    const auto toks = tokenize(sentence);
    const std::unordered_set<std::string> sset(toks.begin(), toks.end());
    std::size_t overlap = 0;
    for (const auto& w : qset) overlap += sset.contains(w) ? 1 : 0;
    if (overlap > best_overlap) {
      best_overlap = overlap;
      best.answer = std::string(sentence);
    }
  }
  best.probability = static_cast<double>(best_overlap) / static_cast<double>(qset.size());
  return best;
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path, std::uint64_t oov_seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open embeddings " + path.string());
  EmbeddingTable table;
  table.kind_ = Kind::File;
  table.source_ = path;
  table.seed_ = oov_seed;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string word;
    if (!(ss >> word)) continue;
    std::vector<double> v;
    std::string tok;
    while (ss >> tok) {
      double x = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
      if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": bad number '" +
                                 tok + "'");
      }
      v.push_back(x);
    }
    if (table.dimension_ == 0) {
      if (v.empty()) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": no vector values");
      }
      table.dimension_ = v.size();
    } else if (v.size() != table.dimension_) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(table.dimension_) + " values, found " +
                               std::to_string(v.size()));
    }
    if (table.index_.contains(word)) continue;
    table.index_.emplace(word, table.vectors_.size());
    table.vectors_.push_back(std::move(v));
  }
  if (table.dimension_ == 0) throw std::runtime_error(path.string() + ": empty embedding file");
  Rng rng(oov_seed);
  table.oov_.resize(table.dimension_);
  for (auto& x : table.oov_) x = rng.uniform(-0.05, 0.05);
  return table;
}

EmbeddingTable EmbeddingTable::hashed(std::size_t dimension, std::uint64_t seed, double scale) {
  if (dimension == 0) throw std::invalid_argument("embedding dimension must be positive");
  EmbeddingTable table;
  table.kind_ = Kind::Hashed;
  table.dimension_ = dimension;
  table.seed_ = seed;
  table.scale_ = scale;
  table.oov_.assign(dimension, 0.0);
  return table;
}

bool EmbeddingTable::contains(std::string_view token) const {
  return kind_ == Kind::Hashed || index_.contains(std::string(token));
}

void EmbeddingTable::lookup(std::string_view token, std::span<double> out) const {
  if (kind_ == Kind::Hashed) {
    Rng rng(derive_seed(seed_, fnv1a(token)));
    for (auto& x : out) x = rng.uniform(-scale_, scale_);
    return;
  }
  const auto it = index_.find(std::string(token));
  const auto& v = it == index_.end() ? oov_ : vectors_[it->second];
  std::copy(v.begin(), v.end(), out.begin());
}

}  // namespace convnarr
