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
#ifndef CONVNARR_TESTS_SUPPORT_HPP
#define CONVNARR_TESTS_SUPPORT_HPP

// Data generators shared by the unit tests and the acceptance binary.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "convnarr/corpus.hpp"
#include "convnarr/features.hpp"
#include "convnarr/han.hpp"
#include "convnarr/narrative.hpp"
#include "convnarr/rng.hpp"
#include "convnarr/viz.hpp"

namespace convnarr::testing {

struct GenderSet {
  std::vector<std::array<double, kEgemapsCount>> rows;
  std::vector<Gender> labels;
};

// Linearly separable windows: a random hyperplane through the column means,
// points inside a margin of 0.25 (in whitened units) rejected. Columns get
// different offsets and scales so the classifier has to standardise.
inline GenderSet separable_gender_set(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::array<double, kEgemapsCount> w{}, mu{}, sd{};
  double norm = 0.0;
  for (std::size_t j = 0; j < kEgemapsCount; ++j) {
    w[j] = rng.normal();
    norm += w[j] * w[j];
    mu[j] = rng.uniform(-20.0, 40.0);
    sd[j] = rng.uniform(0.1, 10.0);
  }
  norm = std::sqrt(norm);
  GenderSet set;
  while (set.rows.size() < n) {
    std::array<double, kEgemapsCount> z{}, x{};
    double margin = 0.0;
    for (std::size_t j = 0; j < kEgemapsCount; ++j) {
      z[j] = rng.normal();
      margin += w[j] * z[j] / norm;
      x[j] = mu[j] + sd[j] * z[j];
    }
    if (std::abs(margin) < 0.25) continue;
    set.rows.push_back(x);
    set.labels.push_back(margin > 0 ? Gender::Female : Gender::Male);
  }
  return set;
}

// A small randomly parameterised HAN and a random document of 3 turns with
// 3 to 5 words, for gradient and attention checks.
struct HanCase {
  han::HanModel model;
  han::EncodedDoc doc;
  double label = 0.0;
};

inline HanCase random_han_case(std::uint64_t seed, bool bidirectional, std::size_t dim = 8,
                               std::size_t units = 8) {
  Rng rng(seed);
  han::HanConfig c;
  c.embedding_dim = dim;
  c.gru_units = units;
  c.seed = seed;
  c.l2 = 1e-3;
  c.bidirectional = bidirectional;
  HanCase hc{han::HanModel::init(c, 5.0), {}, rng.uniform(0.0, 24.0)};
  // Larger than the init scale so gates leave their linear region.
  for (auto& p : hc.model.params) p = rng.uniform(-0.8, 0.8);
  hc.doc.dim = dim;
  for (std::size_t t = 0; t < 3; ++t) {
    const std::size_t words = 3 + static_cast<std::size_t>(rng.below(3));
    hc.doc.tokens.emplace_back();
    hc.doc.vectors.emplace_back();
    hc.doc.source_turn.push_back(t);
    for (std::size_t w = 0; w < words; ++w) {
      hc.doc.tokens.back().push_back("w" + std::to_string(w));
      for (std::size_t k = 0; k < dim; ++k) hc.doc.vectors.back().push_back(rng.uniform(-1.0, 1.0));
    }
  }
  return hc;
}

// Narrative renderings of the three-session fixture, keyed by golden file
// name: <id>.summary.txt, <id>.DAPN.txt and <id>.DAPNC.txt.
inline std::map<std::string, std::string> render_fixture_narratives(const std::filesystem::path& fixtures) {
  const auto corpus = parse_corpus(fixtures / "corpus");
  const auto standardizer = Standardizer::load(fixtures / "standardizer.json");
  const auto gender = train_gender_model(corpus.sessions);
  const StubPersonalityClient personality;
  const StubComprehensionClient comprehension;
  NarrativeContext ctx;
  ctx.standardizer = &standardizer;
  ctx.comprehension = &comprehension;

  std::map<std::string, std::string> out;
  for (const auto& s : corpus.sessions) {
    const auto f = assemble_features(s, gender, personality);
    out[s.id + ".summary.txt"] = serialize_narrative(coarse_summary(f, standardizer, all_families()));
    out[s.id + ".DAPN.txt"] = serialize_narrative(assemble_input(s, f, InputConfig::DAPN, ctx));
    out[s.id + ".DAPNC.txt"] = serialize_narrative(assemble_input(s, f, InputConfig::DAPNC, ctx));
  }
  return out;
}

struct AttentionPage {
  NarrativeDocument narrative;
  han::EncodedDoc doc;
  han::AttentionTrace trace;
  viz::VizDocument viz;
  std::string html;
};

// Attention page for one fixture session's DAPN input under a fixed untrained
// model and hashed embeddings, so the output is fully deterministic.
inline AttentionPage fixture_attention_page(const std::filesystem::path& fixtures, const std::string& id) {
  const auto corpus = parse_corpus(fixtures / "corpus");
  const auto standardizer = Standardizer::load(fixtures / "standardizer.json");
  const auto gender = train_gender_model(corpus.sessions);
  const StubPersonalityClient personality;
  const StubComprehensionClient comprehension;
  NarrativeContext ctx;
  ctx.standardizer = &standardizer;
  ctx.comprehension = &comprehension;
  const Session* s = corpus.find(id);
  if (s == nullptr) throw std::runtime_error("no fixture session " + id);
  const auto narrative = assemble_input(*s, assemble_features(*s, gender, personality), InputConfig::DAPN, ctx);

  han::HanConfig cfg;
  cfg.embedding_dim = 8;
  cfg.gru_units = 8;
  cfg.seed = 7;
  const auto model = han::HanModel::init(cfg, 10.0);
  AttentionPage page;
  page.narrative = narrative;
  page.doc = han::encode(narrative, EmbeddingTable::hashed(8, 1, 1.0));
  const auto fr = han::forward(model, page.doc);
  page.trace = fr.trace;
  page.viz = viz::standardize_attention(fr.trace, page.doc, &narrative);
  page.viz.session_id = s->id;
  page.viz.predicted = han::clip_prediction(fr.raw);
  if (s->phq) page.viz.truth = *s->phq;
  page.html = viz::emit_html(page.viz);
  return page;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Compares against the checked-in goldens; with CONVNARR_UPDATE_GOLDEN set the
// goldens are rewritten instead. Returns the names that differ.
inline std::vector<std::string> compare_goldens(const std::map<std::string, std::string>& rendered,
                                                const std::filesystem::path& golden_dir) {
  std::vector<std::string> mismatched;
  const bool update = std::getenv("CONVNARR_UPDATE_GOLDEN") != nullptr;
  for (const auto& [name, text] : rendered) {
    const auto path = golden_dir / name;
    if (update) {
      std::filesystem::create_directories(golden_dir);
      std::ofstream(path, std::ios::binary) << text;
      continue;
    }
    if (!std::filesystem::exists(path) || slurp(path) != text) mismatched.push_back(name);
  }
  return mismatched;
}

}  // namespace convnarr::testing

#endif  // CONVNARR_TESTS_SUPPORT_HPP
