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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "convnarr/evaluation.hpp"
#include "convnarr/han.hpp"
#include "convnarr/kernels.hpp"
#include "support.hpp"

using namespace convnarr;
using namespace convnarr::han;
namespace fs = std::filesystem;

namespace {

// Two-word documents whose label depends on which of two words appears, for
// training smoke tests.
struct Toy {
  std::vector<EncodedDoc> docs;
  std::vector<double> labels;
};

Toy toy_corpus(std::size_t n, std::size_t dim, std::uint64_t seed) {
  const auto table = EmbeddingTable::hashed(dim, 17);
  Rng rng(seed);
  Toy t;
  for (std::size_t i = 0; i < n; ++i) {
    const bool sad = rng.bernoulli(0.5);
    NarrativeDocument doc;
    doc.turns.push_back({TurnKind::Utterance, "the interviewer said hello"});
    doc.turns.push_back({TurnKind::Utterance, sad ? "the participant said tired and sad"
                                                  : "the participant said fine and happy"});
    t.docs.push_back(encode(doc, table));
    t.labels.push_back(sad ? 18.0 : 4.0);
  }
  return t;
}

HanConfig small_config(std::uint64_t seed) {
  HanConfig c;
  c.embedding_dim = 6;
  c.gru_units = 4;
  c.epochs = 5;
  c.batch_size = 4;
  c.learning_rate = 0.05;
  c.gru_dropout = 0.2;
  c.recurrent_dropout = 0.2;
  c.l2 = 1e-4;
  c.seed = seed;
  return c;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

fs::path temp(const std::string& name) { return fs::temp_directory_path() / ("convnarr_han_" + name); }

}  // namespace

TEST_CASE("kernel ISA is reported") {
  MESSAGE("HAN kernels: " << kernels::isa_name(kernels::active_isa()));
  CHECK_FALSE(kernels::isa_name(kernels::active_isa()).empty());
}

TEST_CASE("layout sizes") {
  // GRU: 3H(I + H + 1); attention: D(D + 2); output: D + 1.
  auto gru = [](std::size_t i, std::size_t h) { return 3 * h * (i + h + 1); };
  auto att = [](std::size_t d) { return d * (d + 2); };
  const auto uni = Layout::make(4, 3, false);
  CHECK(uni.total == gru(4, 3) + att(3) + gru(3, 3) + att(3) + 3 + 1);
  const auto bi = Layout::make(4, 3, true);
  CHECK(bi.total == 2 * gru(4, 3) + att(6) + 2 * gru(6, 3) + att(6) + 6 + 1);

  const auto mask = uni.weight_mask();
  REQUIRE(mask.size() == uni.total);
  CHECK(mask[uni.word_fwd.w]);
  CHECK(mask[uni.word_fwd.u]);
  CHECK_FALSE(mask[uni.word_fwd.b]);
  CHECK_FALSE(mask[uni.word_att.bias]);
  CHECK(mask[uni.word_att.context]);
  CHECK(mask[uni.out_w]);
  CHECK_FALSE(mask[uni.out_b]);
}

TEST_CASE("config validation") {
  HanConfig c;
  CHECK_NOTHROW(c.check());
  c.gru_dropout = 1.0;
  CHECK_THROWS_AS(c.check(), std::invalid_argument);
  c = {};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.check(), std::invalid_argument);
  c = {};
  c.learning_rate = -1;
  CHECK_THROWS_AS(c.check(), std::invalid_argument);
  c = {};
  c.gru_units = 0;
  CHECK_THROWS_AS(c.check(), std::invalid_argument);
}

TEST_CASE("encode drops empty turns and truncates") {
  const auto table = EmbeddingTable::hashed(3, 1);
  NarrativeDocument doc;
  doc.turns = {{TurnKind::SummaryLine, "one two three"},
               {TurnKind::Utterance, "..."},
               {TurnKind::Utterance, "four five"},
               {TurnKind::Utterance, "six"}};
  const auto e = encode(doc, table, 2, 2);
  REQUIRE(e.turn_count() == 2);
  CHECK(e.tokens[0] == std::vector<std::string>{"one", "two"});
  CHECK(e.tokens[1] == std::vector<std::string>{"four", "five"});
  CHECK(e.source_turn == std::vector<std::size_t>{0, 2});
  CHECK(e.vectors[0].size() == 6);
  std::vector<double> v(3);
  table.lookup("five", v);
  CHECK(std::equal(v.begin(), v.end(), e.vectors[1].begin() + 3));

  NarrativeDocument empty;
  empty.turns = {{TurnKind::Utterance, "?!"}};
  CHECK_THROWS_AS(encode(empty, table), std::invalid_argument);
}

TEST_CASE("analytic gradients match finite differences") {
  for (bool bidi : {false, true}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto hc = testing::random_han_case(seed, bidi);
      GradientCheckOptions opt;
      opt.seed = seed;
      opt.max_params = 100000;
      const double err = gradient_check(hc.model, hc.doc, hc.label, opt);
      CAPTURE(bidi);
      CAPTURE(seed);
      CHECK(err < 1e-4);
    }
  }
}

TEST_CASE("gradient check catches a sign error") {
  auto hc = testing::random_han_case(3, false);
  GradientCheckOptions opt;
  opt.fault = detail::Fault::FlipAttentionContextSign;
  opt.max_params = 100000;
  CHECK(gradient_check(hc.model, hc.doc, hc.label, opt) > 1e-2);
}

TEST_CASE("attention weights are distributions") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto hc = testing::random_han_case(seed, seed % 2 == 1, 5, 4);
    for (bool training : {false, true}) {
      const auto r = forward(hc.model, hc.doc, training, seed);
      REQUIRE(r.trace.turn_weights.size() == hc.doc.turn_count());
      CHECK(sum(r.trace.turn_weights) == doctest::Approx(1.0).epsilon(1e-9));
      for (std::size_t j = 0; j < hc.doc.turn_count(); ++j) {
        REQUIRE(r.trace.word_weights[j].size() == hc.doc.tokens[j].size());
        CHECK(sum(r.trace.word_weights[j]) == doctest::Approx(1.0).epsilon(1e-9));
        for (double w : r.trace.word_weights[j]) CHECK(w >= 0.0);
      }
    }
  }
}

TEST_CASE("inference is deterministic and clipped") {
  auto hc = testing::random_han_case(4, true);
  CHECK(forward(hc.model, hc.doc).raw == forward(hc.model, hc.doc).raw);
  CHECK(clip_prediction(-3.0) == 0.0);
  CHECK(clip_prediction(30.0) == 24.0);
  CHECK(clip_prediction(7.25) == 7.25);
  const double p = predict(hc.model, hc.doc);
  CHECK(p >= 0.0);
  CHECK(p <= 24.0);
  // Dropout masks change training-mode outputs but are seed-determined.
  hc.model.config.gru_dropout = 0.5;
  hc.model.config.recurrent_dropout = 0.5;
  const double a = forward(hc.model, hc.doc, true, 1).raw;
  CHECK(a == forward(hc.model, hc.doc, true, 1).raw);
  CHECK(a != forward(hc.model, hc.doc, true, 2).raw);
  CHECK(forward(hc.model, hc.doc, false, 1).raw == forward(hc.model, hc.doc, false, 2).raw);

  EncodedDoc wrong = hc.doc;
  wrong.dim = 3;
  CHECK_THROWS_AS(forward(hc.model, wrong), std::invalid_argument);
}

TEST_CASE("training is bitwise reproducible") {
  const auto toy = toy_corpus(12, 6, 1);
  const auto cfg = small_config(42);
  const auto a = train(toy.docs, toy.labels, cfg);
  const auto b = train(toy.docs, toy.labels, cfg);
  CHECK(checkpoint_bytes(a.model) == checkpoint_bytes(b.model));
  CHECK(a.loss_history == b.loss_history);
  auto other = cfg;
  other.seed = 43;
  CHECK(checkpoint_bytes(train(toy.docs, toy.labels, other).model) != checkpoint_bytes(a.model));
}

TEST_CASE("zero learning rate leaves the initial parameters") {
  const auto toy = toy_corpus(8, 6, 2);
  auto cfg = small_config(5);
  cfg.learning_rate = 0.0;
  const auto r = train(toy.docs, toy.labels, cfg);
  const double mean_label = sum(toy.labels) / static_cast<double>(toy.labels.size());
  const auto init = HanModel::init(cfg, mean_label);
  CHECK(r.model.params == init.params);
  CHECK(r.model.params[r.model.layout.out_b] == mean_label);
}

TEST_CASE("training fits a learnable signal") {
  const auto toy = toy_corpus(24, 6, 3);
  auto cfg = small_config(9);
  cfg.gru_dropout = 0.0;
  cfg.recurrent_dropout = 0.0;
  cfg.epochs = 40;
  cfg.learning_rate = 0.3;
  cfg.clip_norm = 1.0;
  const auto r = train(toy.docs, toy.labels, cfg);
  REQUIRE(r.loss_history.size() == 40);
  CHECK(r.loss_history.back() < 0.25 * r.loss_history.front());
  std::vector<double> pred;
  for (const auto& d : toy.docs) pred.push_back(predict(r.model, d));
  CHECK(ccc(toy.labels, pred) > 0.9);
}

TEST_CASE("divergence is reported") {
  const auto toy = toy_corpus(8, 6, 4);
  auto cfg = small_config(1);
  cfg.learning_rate = 1e200;
  cfg.epochs = 3;
  CHECK_THROWS_WITH_AS(train(toy.docs, toy.labels, cfg), doctest::Contains("diverged"), std::runtime_error);
  CHECK_THROWS_AS(train({}, {}, cfg), std::invalid_argument);
}

TEST_CASE("checkpoint round trip and corruption") {
  const auto toy = toy_corpus(6, 6, 5);
  auto cfg = small_config(7);
  cfg.bidirectional = true;
  auto model = train(toy.docs, toy.labels, cfg, EmbeddingSpec::describe(EmbeddingTable::hashed(6, 17))).model;
  const auto path = temp("model.ckpt");
  save_checkpoint(model, path);
  const auto back = load_checkpoint(path);
  CHECK(back.config == model.config);
  CHECK(back.params == model.params);
  CHECK(back.embeddings.kind == "hashed");
  CHECK(back.embeddings.seed == 17);
  CHECK(checkpoint_bytes(back) == checkpoint_bytes(model));
  for (const auto& d : toy.docs) CHECK(predict(back, d) == predict(model, d));

  const auto bytes = checkpoint_bytes(model);
  auto write = [](const fs::path& p, const std::string& b) { std::ofstream(p, std::ios::binary) << b; };
  auto bad = bytes;
  bad[0] = 'X';
  write(temp("magic.ckpt"), bad);
  CHECK_THROWS_WITH_AS(load_checkpoint(temp("magic.ckpt")), doctest::Contains("bad magic"), std::runtime_error);
  write(temp("trunc.ckpt"), bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(load_checkpoint(temp("trunc.ckpt")), std::runtime_error);
  write(temp("short.ckpt"), bytes.substr(0, 10));
  CHECK_THROWS_WITH_AS(load_checkpoint(temp("short.ckpt")), doctest::Contains("truncated"), std::runtime_error);
  bad = bytes;
  bad[8] = 9;
  write(temp("version.ckpt"), bad);
  CHECK_THROWS_WITH_AS(load_checkpoint(temp("version.ckpt")), doctest::Contains("version"), std::runtime_error);
  CHECK_THROWS_AS(load_checkpoint(temp("does_not_exist.ckpt")), std::runtime_error);

  // Header claiming a different size.
  const auto hlen = static_cast<std::size_t>(static_cast<unsigned char>(bytes[12])) |
                    static_cast<std::size_t>(static_cast<unsigned char>(bytes[13])) << 8;
  auto header = nlohmann::json::parse(bytes.substr(20, hlen));
  header["config"]["gru_units"] = 5;
  std::string h = header.dump();
  std::string patched = bytes.substr(0, 12);
  for (int i = 0; i < 8; ++i) patched.push_back(static_cast<char>((h.size() >> (8 * i)) & 0xff));
  patched += h + bytes.substr(20 + hlen);
  write(temp("count.ckpt"), patched);
  CHECK_THROWS_WITH_AS(load_checkpoint(temp("count.ckpt")), doctest::Contains("does not match"),
                       std::runtime_error);
}

TEST_CASE("embedding spec materializes the same table") {
  const auto table = EmbeddingTable::hashed(5, 99, 0.5);
  const auto spec = EmbeddingSpec::describe(table);
  const auto again = spec.materialize();
  std::vector<double> a(5), b(5);
  table.lookup("word", a);
  again.lookup("word", b);
  CHECK(a == b);

  const auto p = temp("emb.txt");
  std::ofstream(p) << "a 1 2\nb 3 4\n";
  const auto fspec = EmbeddingSpec::describe(EmbeddingTable::load(p));
  CHECK(fspec.kind == "file");
  CHECK(fspec.materialize().size() == 2);
  auto broken = fspec;
  broken.dim = 3;
  CHECK_THROWS_AS(broken.materialize(), std::runtime_error);
}

TEST_CASE("attention trace json") {
  auto hc = testing::random_han_case(2, false, 4, 3);
  const auto r = forward(hc.model, hc.doc);
  const auto j = nlohmann::json::parse(trace_to_json(r.trace, hc.doc));
  REQUIRE(j.is_object());
  CHECK(j.dump().find("w0") != std::string::npos);
}

TEST_CASE("random search") {
  SearchSpace space;
  HanConfig base;
  const auto configs = sample_configs(space, base, 20, 3);
  REQUIRE(configs.size() == 20);
  for (const auto& c : configs) {
    CHECK(c.learning_rate >= space.lr_min);
    CHECK(c.learning_rate <= space.lr_max);
    CHECK(c.l2 >= space.l2_min);
    CHECK(c.l2 <= space.l2_max);
    CHECK(c.gru_dropout <= space.gru_dropout_max);
    CHECK(c.recurrent_dropout <= space.recurrent_dropout_max);
    CHECK(std::find(space.gru_units.begin(), space.gru_units.end(), c.gru_units) != space.gru_units.end());
  }
  CHECK(sample_configs(space, base, 20, 3) == configs);

  // Score by learning rate: the largest sampled rate must win.
  const auto r = random_search(space, base, 20, 3, [](const HanConfig& c) { return c.learning_rate; });
  double best = 0;
  for (const auto& c : configs) best = std::max(best, c.learning_rate);
  CHECK(r.best.learning_rate == best);
  CHECK(r.trials.size() == 20);
  const auto tie = random_search(space, base, 5, 3, [](const HanConfig&) { return 1.0; });
  CHECK(tie.best_index == 0);
  CHECK_THROWS_AS(random_search(space, base, 0, 3, [](const HanConfig&) { return 0.0; }), std::invalid_argument);
}

TEST_CASE("cross validation predictions") {
  const auto toy = toy_corpus(10, 6, 6);
  auto cfg = small_config(2);
  cfg.epochs = 2;
  const auto folds = kfold_split(10, 5, 1);
  const auto a = cross_validate(toy.docs, toy.labels, folds, cfg);
  REQUIRE(a.size() == 10);
  for (double p : a) {
    CHECK(p >= 0.0);
    CHECK(p <= 24.0);
  }
  CHECK(cross_validate(toy.docs, toy.labels, folds, cfg) == a);
}
