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
#include <cmath>
#include <stdexcept>

#include "convnarr/narrative.hpp"
#include "support.hpp"

using namespace convnarr;

namespace {

// Independent speller for the cardinal-words check, n < 1,000,000. Compound
// tens are written with a space ("ninety nine") so each word tokenizes alone.
std::string spell(std::uint64_t n) {
  static const char* small[] = {"zero", "one", "two", "three", "four", "five", "six", "seven", "eight",
                                "nine", "ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen",
                                "sixteen", "seventeen", "eighteen", "nineteen"};
  static const char* tens[] = {"", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy",
                               "eighty", "ninety"};
  auto below_thousand = [&](std::uint64_t x) {
    std::string s;
    if (x >= 100) {
      s = std::string(small[x / 100]) + " hundred";
      x %= 100;
      if (x == 0) return s;
      s += " ";
    }
    if (x < 20) return s + small[x];
    s += tens[x / 10];
    if (x % 10) s += std::string(" ") + small[x % 10];
    return s;
  };
  if (n < 1000) return below_thousand(n);
  std::string s = below_thousand(n / 1000) + " thousand";
  if (n % 1000) s += " " + below_thousand(n % 1000);
  return s;
}

Session session_with(std::vector<TalkTurn> turns, std::vector<LaughterEvent> laughs = {}) {
  Session s;
  s.id = "T";
  s.turns = std::move(turns);
  s.laughter_events = std::move(laughs);
  return s;
}

Standardizer unit_standardizer() {
  const auto names = feature_names(all_families());
  return Standardizer(names, std::vector<double>(names.size(), 0.0), std::vector<double>(names.size(), 1.0));
}

class FixedAnswer final : public ComprehensionClient {
 public:
  explicit FixedAnswer(double p) : p_(p) {}
  ComprehensionAnswer comprehend(std::string_view, std::string_view) const override {
    if (p_ < 0) throw std::runtime_error("service down");
    return {"an answer", p_};
  }

 private:
  double p_;
};

}  // namespace

TEST_CASE("z buckets use strict thresholds and are monotone") {
  CHECK(z_bucket(1.4) == Qualifier::High);
  CHECK(z_bucket(0.3) == Qualifier::Normal);
  CHECK(z_bucket(-2.5) == Qualifier::VeryLow);
  CHECK(z_bucket(1.0) == Qualifier::Normal);
  CHECK(z_bucket(-1.0) == Qualifier::Normal);
  CHECK(z_bucket(2.0) == Qualifier::High);
  CHECK(z_bucket(-2.0) == Qualifier::Low);
  CHECK(z_bucket(2.0000001) == Qualifier::VeryHigh);
  Qualifier prev = Qualifier::VeryLow;
  for (double z = -4.0; z <= 4.0; z += 0.01) {
    const auto q = z_bucket(z);
    CHECK(static_cast<int>(q) >= static_cast<int>(prev));
    prev = q;
  }
  CHECK(qualifier_text(Qualifier::VeryLow) == "very low");
  CHECK(qualifier_text(Qualifier::VeryHigh) == "very high");
}

TEST_CASE("standardizer fitting") {
  SessionFeatures a, b;
  a.total_words = 10;
  b.total_words = 20;
  const std::vector<SessionFeatures> two{a, b};
  const auto st = fit_standardizer(two);
  const auto i = st.index_of("total_words");
  CHECK(st.means()[i] == 15.0);
  CHECK(st.stds()[i] == 5.0);
  CHECK(*st.z("total_words", 25.0) == doctest::Approx(2.0));
  // Constant column: flagged, no z.
  CHECK(st.zero_variance(st.index_of("openness")));
  CHECK_FALSE(st.z("openness", 99.0).has_value());
  CHECK(fit_standardizer(two) == st);
  CHECK(Standardizer::from_json(st.to_json()) == st);
  CHECK_THROWS_AS(fit_standardizer(std::vector<SessionFeatures>{a}), std::invalid_argument);
  CHECK_THROWS_AS(st.index_of("nope"), std::out_of_range);
}

TEST_CASE("coarse summary wording") {
  const auto st = unit_standardizer();
  SessionFeatures f;
  f.big5 = {0, 0, 0, 0, 0};

  SUBCASE("one high feature plus the gender sentence") {
    f.total_words = 1;  // z = 1: normal
    const std::array<Family, 1> d{Family::Demographics};
    auto doc = coarse_summary(f, st, d);
    REQUIRE(doc.turns.size() == 1);
    CHECK(doc.turns[0].text == "The participant is female .");
    f.total_words = 2;
    f.gender = Gender::Male;
    doc = coarse_summary(f, st, d);
    REQUIRE(doc.turns.size() == 2);
    CHECK(doc.turns[0].text == "number of words high ");
    CHECK(doc.turns[1].text == "The participant is male .");
  }
  SUBCASE("delay statistics share one line") {
    f.delay = {-3, -1.5, -1.2, -1.1};
    const std::array<Family, 1> p{Family::Prosody};
    const auto doc = coarse_summary(f, st, p);
    REQUIRE(doc.turns.size() == 1);
    CHECK(doc.turns[0].text ==
          "minimum delay very low maximum delay low average delay low variance delay low ");
  }
  SUBCASE("actions use the AU names") {
    f.laughter_count = 3;
    f.au[1].intensity = {0, 0, 1.5, 0};
    const std::array<Family, 1> a{Family::Actions};
    const auto doc = coarse_summary(f, st, a);
    REQUIRE(doc.turns.size() == 2);
    CHECK(doc.turns[0].text == "laughter counts very high ");
    CHECK(doc.turns[1].text == "average chin raiser high ");
  }
}

TEST_CASE("number to words") {
  CHECK(number_to_words(200) == "two hundred");
  CHECK(number_to_words(1480) == "one thousand five hundred");
  CHECK(number_to_words(20) == "");
  CHECK(number_to_words(49) == "");
  CHECK(number_to_words(50) == "one hundred");
  CHECK(number_to_words(2600) == "two thousand six hundred");
  CHECK_THROWS_AS(number_to_words(-1), std::invalid_argument);
  for (std::uint64_t n = 0; n < 200000; n += (n < 2000 ? 1 : 97)) CHECK(cardinal_words(n) == spell(n));
  CHECK(cardinal_words(1000000) == "one million");
  CHECK(cardinal_words(2000017) == "two million seventeen");
}

TEST_CASE("delay and rate qualifiers") {
  CHECK(delay_qualifier(1.5) == "a long delay");
  CHECK(delay_qualifier(1.0) == "a long delay");
  CHECK(delay_qualifier(2.0) == "a significantly long delay");
  CHECK_FALSE(delay_qualifier(0.9).has_value());
  CHECK_FALSE(delay_qualifier(-3.0).has_value());
  CHECK(rate_adverb(1.5) == "quickly");
  CHECK(rate_adverb(2.5) == "very quickly");
  CHECK(rate_adverb(-1.5) == "slowly");
  CHECK(rate_adverb(-2.5) == "very slowly");
  CHECK_FALSE(rate_adverb(-1.0).has_value());
  CHECK(rate_adverb(2.0) == "quickly");
}

TEST_CASE("laughter must be fully contained in the turn") {
  const auto turn = TalkTurn::make(Speaker::Participant, 10000, 15000, "x");
  CHECK(laughter_within({11000, 12000}, turn));
  CHECK(laughter_within({10000, 15000}, turn));
  CHECK_FALSE(laughter_within({9500, 11000}, turn));
  CHECK_FALSE(laughter_within({14000, 15001}, turn));

  const auto s = session_with({TalkTurn::make(Speaker::Interviewer, 0, 9000, "q"), turn}, {{9500, 11000}});
  CHECK(weave_narrative(s).turns[1].text == "after one thousand milliseconds the participant said x");
  const auto s2 = session_with({TalkTurn::make(Speaker::Interviewer, 0, 9000, "q"), turn}, {{11000, 12000}});
  CHECK(weave_narrative(s2).turns[1].text ==
        "after one thousand milliseconds the participant laughed and said x");
}

TEST_CASE("weave composes delay, qualifier and adverb") {
  const auto s = session_with({TalkTurn::make(Speaker::Interviewer, 0, 1000, "how are you"),
                               TalkTurn::make(Speaker::Participant, 1200, 2200, "fine thanks")});
  WithinSessionStats stats;
  stats.delay = {200, 0};  // zero variance: no qualifier
  stats.rate = {60, 40};   // 120 wpm: z = 1.5
  const auto doc = weave_narrative(s, stats);
  REQUIRE(doc.turns.size() == 2);
  CHECK(doc.turns[0].text == "the interviewer said how are you");
  CHECK(doc.turns[1].text == "after two hundred milliseconds the participant quickly said fine thanks");
  stats.delay = {100, 50};  // z = 2
  CHECK(weave_narrative(s, stats).turns[1].text ==
        "after two hundred milliseconds a significantly long delay the participant quickly said fine thanks");
}

TEST_CASE("within-session statistics use only that session") {
  const auto s = session_with({TalkTurn::make(Speaker::Interviewer, 0, 1000, "q"),
                               TalkTurn::make(Speaker::Participant, 1100, 2100, "a b"),
                               TalkTurn::make(Speaker::Interviewer, 2200, 3000, "q"),
                               TalkTurn::make(Speaker::Participant, 3300, 4300, "a b c d")});
  const auto st = within_session_stats(s);
  CHECK(st.delay.mean == doctest::Approx(200.0));
  CHECK(st.delay.std == doctest::Approx(100.0));
  CHECK(st.rate.mean == doctest::Approx(180.0));
  CHECK(st.rate.std == doctest::Approx(60.0));
  CHECK_FALSE(turn_rate_wpm(TalkTurn::make(Speaker::Participant, 5, 5, "x")).has_value());
}

TEST_CASE("comprehension block pairs questions and answers") {
  const auto s = session_with({TalkTurn::make(Speaker::Participant, 0, 100, "Fatigued I'm very tired")});
  const auto qs = default_questions();
  REQUIRE(qs.size() == 9);
  const auto doc = comprehension_block(s, qs, StubComprehensionClient{});
  REQUIRE(doc.turns.size() == 18);
  for (std::size_t i = 0; i < doc.turns.size(); i += 2) {
    CHECK(doc.turns[i].kind == TurnKind::Question);
    CHECK(doc.turns[i + 1].kind == TurnKind::Answer);
  }
  CHECK(doc.turns[13].text == "Fatigued I'm very tired");  // "Do I feel tired?"
  CHECK(doc.turns[1].text == kNotApplicable);

  CHECK(comprehension_block(s, qs, FixedAnswer(0.05)).turns[1].text == kNotApplicable);
  CHECK(comprehension_block(s, qs, FixedAnswer(0.1)).turns[1].text == "an answer");
  CHECK(comprehension_block(s, qs, FixedAnswer(-1)).turns[1].text == kNotApplicable);
}

TEST_CASE("configurations add one family at a time") {
  const auto corpus = parse_corpus(std::filesystem::path(CONVNARR_FIXTURES) / "corpus");
  const auto st = Standardizer::load(std::filesystem::path(CONVNARR_FIXTURES) / "standardizer.json");
  const auto gender = train_gender_model(corpus.sessions);
  const StubComprehensionClient qa;
  NarrativeContext ctx{&st, &qa};
  const auto& s = corpus.sessions[0];
  const auto f = assemble_features(s, gender, StubPersonalityClient{});

  std::map<InputConfig, NarrativeDocument> docs;
  for (auto c : kAllConfigs) docs[c] = assemble_input(s, f, c, ctx);
  auto only = [](const NarrativeDocument& d, TurnKind k) {
    return std::all_of(d.turns.begin(), d.turns.end(), [&](const auto& t) { return t.kind == k; });
  };
  CHECK(only(docs[InputConfig::D], TurnKind::SummaryLine));
  CHECK(docs[InputConfig::D].turns.back().text == "The participant is female .");
  const auto& da = docs[InputConfig::DA].turns;
  const auto& dap = docs[InputConfig::DAP].turns;
  CHECK(std::equal(da.begin(), da.end(), dap.begin()));
  CHECK(dap.size() > da.size());
  CHECK(docs[InputConfig::DAPC].turns.size() == dap.size() + 18);
  CHECK(docs[InputConfig::DAPN].turns.size() == dap.size() + s.turns.size());
  CHECK(docs[InputConfig::DAPNC].turns.size() == dap.size() + 18 + s.turns.size());

  // Every utterance appears verbatim exactly once in the narrative.
  const auto text = serialize_narrative(docs[InputConfig::DAPN]);
  for (const auto& t : s.turns) {
    const auto first = text.find(t.text);
    REQUIRE(first != std::string::npos);
    CHECK(text.find(t.text, first + 1) == std::string::npos);
  }

  CHECK(parse_input_config("DAPNC") == InputConfig::DAPNC);
  CHECK_THROWS_AS(parse_input_config("DX"), std::invalid_argument);
  CHECK_THROWS_AS(assemble_input(s, f, InputConfig::D, NarrativeContext{}), std::invalid_argument);
  CHECK_THROWS_AS(assemble_input(s, f, InputConfig::DAPC, NarrativeContext{&st, nullptr}),
                  std::invalid_argument);
}

TEST_CASE("narrative serialization round-trips") {
  NarrativeDocument doc;
  doc.turns = {{TurnKind::SummaryLine, "a|b"},
               {TurnKind::Question, "back\\slash"},
               {TurnKind::Answer, "two\nlines"},
               {TurnKind::Utterance, "plain"}};
  const auto text = serialize_narrative(doc);
  CHECK(text == "S|a|b\nQ|back\\\\slash\nA|two\\nlines\nU|plain\n");
  CHECK(parse_narrative(text) == doc);
  CHECK_THROWS_AS(parse_narrative("X|oops\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_narrative("no tag\n"), std::runtime_error);
}

TEST_CASE("fixture narratives match the goldens") {
  const auto rendered = testing::render_fixture_narratives(CONVNARR_FIXTURES);
  CHECK(rendered.size() == 9);
  const auto bad = testing::compare_goldens(rendered, CONVNARR_GOLDEN);
  for (const auto& name : bad) MESSAGE("golden mismatch: " << name);
  CHECK(bad.empty());
  // Deterministic across repeated renders.
  CHECK(testing::render_fixture_narratives(CONVNARR_FIXTURES) == rendered);
}
