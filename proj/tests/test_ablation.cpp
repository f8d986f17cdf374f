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
#include <doctest.h>

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "convnarr/ablation.hpp"
#include "convnarr/synth.hpp"

using namespace convnarr;

namespace {

struct Setup {
  Corpus corpus;
  EmbeddingTable embeddings = EmbeddingTable::hashed(8, 3);
  StubPersonalityClient personality;
  StubComprehensionClient comprehension;
  AblationOptions opt;

  Setup() {
    corpus = synth::generate(synth::SynthParams::strong(30, 11));
    opt.seed = 5;
    opt.k = 3;
    opt.tree_grid = {{2, 2, 0.01}, {5, 3, 0.05}};
    opt.han.embedding_dim = 8;
    opt.han.gru_units = 4;
    opt.han.epochs = 2;
    opt.han.learning_rate = 0.1;
    opt.han.clip_norm = 1.0;
    opt.bootstrap_resamples = 50;
    opt.embeddings = &embeddings;
    opt.personality = &personality;
    opt.comprehension = &comprehension;
  }
};

std::size_t count(const std::string& s, const std::string& what) {
  std::size_t n = 0;
  for (auto p = s.find(what); p != std::string::npos; p = s.find(what, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("model kind names") {
  CHECK(parse_model_kind("tree") == ModelKind::Tree);
  CHECK(parse_model_kind("han") == ModelKind::Han);
  CHECK(to_string(ModelKind::Han) == "han");
  CHECK_THROWS_AS(parse_model_kind("svm"), std::invalid_argument);
  CHECK(tree_supports(InputConfig::DAP));
  CHECK_FALSE(tree_supports(InputConfig::DAPC));
}

TEST_CASE("report shape: six HAN cells, three tree cells, N/A elsewhere") {
  Setup s;
  const auto report = run_ablation(s.corpus, s.opt);
  CHECK(report.k == 3);
  REQUIRE(report.cells.size() == 12);
  std::size_t han = 0, tree = 0;
  for (const auto& c : report.cells) {
    if (!c.available) {
      CHECK(c.model == ModelKind::Tree);
      CHECK_FALSE(tree_supports(c.config));
      continue;
    }
    (c.model == ModelKind::Han ? han : tree)++;
    CHECK(c.fold_ccc.size() == 3);
    CHECK(c.predictions.size() == 30);
    CHECK(c.tree_choice.has_value() == (c.model == ModelKind::Tree));
  }
  CHECK(han == 6);
  CHECK(tree == 3);
  CHECK(report.find(ModelKind::Han, InputConfig::DAPNC)->label() == "HAN/DAPNC");
  CHECK(report.comparisons.size() == 9 * 8 / 2);

  // Held-out folds partition the labelled sessions.
  std::set<std::string> seen;
  std::size_t total = 0;
  for (const auto& fold : report.held_out) {
    total += fold.size();
    seen.insert(fold.begin(), fold.end());
  }
  CHECK(report.held_out.size() == 3);
  CHECK(total == 30);
  CHECK(seen.size() == 30);

  const auto table = report.to_table();
  CHECK(count(table, "N/A") == 6);  // three cells, in both blocks
  CHECK(table.find("DAPNC") != std::string::npos);
  CHECK(table.find("Bootstrap") != std::string::npos);

  const auto j = nlohmann::json::parse(report.to_json());
  CHECK(j["cells"].size() == 12);
  CHECK(j["bootstrap"].size() == 36);
  CHECK(j["folds"].size() == 3);

  // The mean and pooled numbers are the ones the predictions imply.
  const auto& cell = *report.find(ModelKind::Tree, InputConfig::DAP);
  std::vector<double> t, p;
  for (const auto& [id, pr] : cell.predictions) {
    t.push_back(pr.truth);
    p.push_back(pr.predicted);
  }
  CHECK(cell.pooled_ccc == doctest::Approx(ccc(t, p)));
  double mean = 0;
  for (double v : cell.fold_ccc) mean += v / 3;
  CHECK(cell.mean_ccc == doctest::Approx(mean));
}

TEST_CASE("ablation is deterministic and independent of the job count") {
  Setup s;
  s.opt.configs = {InputConfig::D, InputConfig::DAPN};
  const auto a = run_ablation(s.corpus, s.opt);
  s.opt.jobs = 3;
  const auto b = run_ablation(s.corpus, s.opt);
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("unlabelled sessions are skipped and options validated") {
  Setup s;
  s.opt.models = {ModelKind::Tree};
  s.opt.configs = {InputConfig::DA};
  s.opt.bootstrap_resamples = 0;
  s.corpus.sessions[0].phq.reset();
  const auto r = run_ablation(s.corpus, s.opt);
  REQUIRE(r.cells.size() == 1);
  CHECK(r.cells[0].predictions.size() == 29);
  CHECK(r.comparisons.empty());
  CHECK(r.to_table().find("Bootstrap") == std::string::npos);

  auto bad = s.opt;
  bad.personality = nullptr;
  CHECK_THROWS_AS(run_ablation(s.corpus, bad), std::invalid_argument);
  bad = s.opt;
  bad.k = 40;
  CHECK_THROWS_AS(run_ablation(s.corpus, bad), std::invalid_argument);
  bad = s.opt;
  bad.models = {ModelKind::Han};
  bad.embeddings = nullptr;
  CHECK_THROWS_AS(run_ablation(s.corpus, bad), std::invalid_argument);
  bad = s.opt;
  bad.tree_grid.clear();
  CHECK_THROWS_AS(run_ablation(s.corpus, bad), std::invalid_argument);
}
