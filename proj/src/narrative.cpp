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
#include "convnarr/narrative.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace convnarr {

char kind_tag(TurnKind kind) {
  switch (kind) {
    case TurnKind::SummaryLine:
      return 'S';
    case TurnKind::Question:
      return 'Q';
    case TurnKind::Answer:
      return 'A';
    case TurnKind::Utterance:
      break;
  }
  return 'U';
}

std::string serialize_narrative(const NarrativeDocument& doc) {
  std::string out;
  for (const auto& t : doc.turns) {
    out.push_back(kind_tag(t.kind));
    out.push_back('|');
    for (char c : t.text) {
      if (c == '\\') out += "\\\\";
      else if (c == '\n') out += "\\n";
      else out.push_back(c);
    }
    out.push_back('\n');
  }
  return out;
}

NarrativeDocument parse_narrative(std::string_view text) {
  NarrativeDocument doc;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.size() < 2 || line[1] != '|') {
      throw std::runtime_error("narrative line " + std::to_string(line_no) + ": missing kind tag");
    }
    NarrativeTurn t;
    switch (line[0]) {
      case 'S': t.kind = TurnKind::SummaryLine; break;
      case 'Q': t.kind = TurnKind::Question; break;
      case 'A': t.kind = TurnKind::Answer; break;
      case 'U': t.kind = TurnKind::Utterance; break;
      default:
        throw std::runtime_error("narrative line " + std::to_string(line_no) + ": unknown kind tag");
    }
    for (std::size_t i = 2; i < line.size(); ++i) {
      if (line[i] == '\\' && i + 1 < line.size()) {
        t.text.push_back(line[i + 1] == 'n' ? '\n' : line[i + 1]);
        ++i;
      } else {
        t.text.push_back(line[i]);
      }
    }
    doc.turns.push_back(std::move(t));
  }
  return doc;
}

Standardizer::Standardizer(std::vector<std::string> names, std::vector<double> mean, std::vector<double> std)
    : names_(std::move(names)), mean_(std::move(mean)), std_(std::move(std)) {
  if (names_.size() != mean_.size() || names_.size() != std_.size()) {
    throw std::invalid_argument("standardizer: names/mean/std length mismatch");
  }
}

std::size_t Standardizer::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  throw std::out_of_range("standardizer has no feature '" + std::string(name) + "'");
}

std::optional<double> Standardizer::z(std::size_t i, double value) const {
  if (zero_variance(i)) return std::nullopt;
  return (value - mean_[i]) / std_[i];
}

std::string Standardizer::to_json() const {
  nlohmann::ordered_json j;
  j["features"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < names_.size(); ++i) {
    j["features"].push_back({{"name", names_[i]}, {"mean", mean_[i]}, {"std", std_[i]}});
  }
  return j.dump(2) + "\n";
}

Standardizer Standardizer::from_json(std::string_view json) {
  const auto j = nlohmann::json::parse(json);
  std::vector<std::string> names;
  std::vector<double> mean, std;
  for (const auto& f : j.at("features")) {
    names.push_back(f.at("name").get<std::string>());
    mean.push_back(f.at("mean").get<double>());
    std.push_back(f.at("std").get<double>());
  }
  return Standardizer(std::move(names), std::move(mean), std::move(std));
}

Standardizer Standardizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return from_json(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

Standardizer fit_standardizer(std::span<const SessionFeatures> training) {
  if (training.size() < 2) throw std::invalid_argument("standardizer needs at least 2 training sessions");
  auto names = feature_names(all_families());
  const std::size_t d = names.size();
  std::vector<double> mean(d, 0.0), std(d, 0.0);
  std::vector<std::vector<double>> rows;
  rows.reserve(training.size());
  for (const auto& f : training) rows.push_back(feature_vector(f, all_families()));
  const double n = static_cast<double>(rows.size());
  for (std::size_t j = 0; j < d; ++j) {
    double s = 0.0;
    for (const auto& r : rows) s += r[j];
    mean[j] = s / n;
    double ss = 0.0;
    for (const auto& r : rows) ss += (r[j] - mean[j]) * (r[j] - mean[j]);
    std[j] = std::sqrt(ss / n);
    if (std[j] == 0.0) spdlog::debug("standardizer: feature {} has zero variance", names[j]);
  }
  return Standardizer(std::move(names), std::move(mean), std::move(std));
}

Qualifier z_bucket(double z) {
  if (z < -2.0) return Qualifier::VeryLow;
  if (z < -1.0) return Qualifier::Low;
  if (z > 2.0) return Qualifier::VeryHigh;
  if (z > 1.0) return Qualifier::High;
  return Qualifier::Normal;
}

std::string_view qualifier_text(Qualifier q) {
  switch (q) {
    case Qualifier::VeryLow:
      return "very low";
    case Qualifier::Low:
      return "low";
    case Qualifier::High:
      return "high";
    case Qualifier::VeryHigh:
      return "very high";
    case Qualifier::Normal:
      break;
  }
  return "";
}

namespace {

// Appends "<label> <qualifier> " when the feature is outside the normal range.
void add_fragment(std::string& line, const Standardizer& st, std::string_view feature,
                  std::string_view label, double value) {
  const auto z = st.z(feature, value);
  if (!z) return;
  const auto q = z_bucket(*z);
  if (q == Qualifier::Normal) return;
  line += label;
  line += ' ';
  line += qualifier_text(q);
  line += ' ';
}

void push_line(NarrativeDocument& doc, std::string line) {
  if (!line.empty()) doc.turns.push_back({TurnKind::SummaryLine, std::move(line)});
}

void stat_fragments(std::string& line, const Standardizer& st, const std::string& prefix,
                    std::string_view label, const SummaryStats& s) {
  add_fragment(line, st, prefix + "_min", "minimum " + std::string(label), s.min);
  add_fragment(line, st, prefix + "_max", "maximum " + std::string(label), s.max);
  add_fragment(line, st, prefix + "_mean", "average " + std::string(label), s.mean);
  add_fragment(line, st, prefix + "_std", "variance " + std::string(label), s.std);
}

}  // namespace

NarrativeDocument coarse_summary(const SessionFeatures& f, const Standardizer& st,
                                 std::span<const Family> families) {
  NarrativeDocument doc;
  auto wants = [&](Family fam) {
    for (auto x : families) {
      if (x == fam) return true;
    }
    return false;
  };
  if (wants(Family::Demographics)) {
    std::string words;
    add_fragment(words, st, "total_words", "number of words", static_cast<double>(f.total_words));
    add_fragment(words, st, "distinct_words", "number of distinct words",
                 static_cast<double>(f.distinct_words));
    push_line(doc, std::move(words));

    std::string traits;
    for (std::size_t t = 0; t < kTraitCount; ++t) add_fragment(traits, st, kTraitNames[t], kTraitNames[t], f.big5[t]);
    push_line(doc, std::move(traits));

    push_line(doc, "The participant is " + std::string(to_string(f.gender)) + " .");
  }
  if (wants(Family::Actions)) {
    std::string laughs;
    add_fragment(laughs, st, "laughter_count", "laughter counts", static_cast<double>(f.laughter_count));
    push_line(doc, std::move(laughs));
    for (std::size_t a = 0; a < kAuCount; ++a) {
      std::string au;
      stat_fragments(au, st, std::string(kAuIds[a]), kAuNames[a], f.au[a].intensity);
      push_line(doc, std::move(au));
    }
  }
  if (wants(Family::Prosody)) {
    std::string delay;
    stat_fragments(delay, st, "delay", "delay", f.delay);
    push_line(doc, std::move(delay));
    std::string rate;
    add_fragment(rate, st, "speech_rate", "speech rate", f.speech_rate_wpm);
    push_line(doc, std::move(rate));
  }
  return doc;
}

const std::array<std::string_view, 4> kHabitQuestions = {
    "Am I diagnosed?", "Am I sleeping well?", "Am I shy?", "How am I feeling lately?"};
const std::array<std::string_view, 5> kSymptomQuestions = {
    "Do I feel depressed most of the day?", "Do I lose interest?", "Do I feel tired?",
    "Do I feel worthless?", "Do I feel like dying?"};

std::vector<std::string> default_questions() {
  std::vector<std::string> q(kHabitQuestions.begin(), kHabitQuestions.end());
  q.insert(q.end(), kSymptomQuestions.begin(), kSymptomQuestions.end());
  return q;
}

NarrativeDocument comprehension_block(const Session& s, std::span<const std::string> questions,
                                      const ComprehensionClient& client) {
  NarrativeDocument doc;
  const auto passage = participant_text(s);
  for (const auto& q : questions) {
    std::string answer(kNotApplicable);
    try {
      const auto a = client.comprehend(q, passage);
      if (a.probability >= kAnswerThreshold && !a.answer.empty()) answer = a.answer;
    } catch (const std::exception& e) {
      spdlog::warn("session {}: comprehension failed for '{}': {}", s.id, q, e.what());
    }
    doc.turns.push_back({TurnKind::Question, q});
    doc.turns.push_back({TurnKind::Answer, std::move(answer)});
  }
  return doc;
}

std::string cardinal_words(std::uint64_t n) {
  static constexpr std::array<std::string_view, 20> ones = {
      "zero",    "one",     "two",       "three",    "four",     "five",    "six",
      "seven",   "eight",   "nine",      "ten",      "eleven",   "twelve",  "thirteen",
      "fourteen", "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen"};
  static constexpr std::array<std::string_view, 10> tens = {
      "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"};
  static constexpr std::array<std::string_view, 5> scales = {"", "thousand", "million", "billion",
                                                             "trillion"};
  if (n == 0) return "zero";

  auto below_thousand = [&](unsigned v) {
    std::string out;
    if (v >= 100) {
      out += ones[v / 100];
      out += " hundred";
      v %= 100;
      if (v) out += ' ';
    }
    if (v >= 20) {
      out += tens[v / 10];
      if (v % 10) {
        out += ' ';
        out += ones[v % 10];
      }
    } else if (v > 0) {
      out += ones[v];
    }
    return out;
  };

  std::vector<std::string> groups;
  for (std::size_t scale = 0; n > 0; ++scale, n /= 1000) {
    const auto chunk = static_cast<unsigned>(n % 1000);
    if (chunk == 0) continue;
    std::string g = below_thousand(chunk);
    if (scale > 0) {
      if (scale >= scales.size()) throw std::out_of_range("number too large to spell");
      g += ' ';
      g += scales[scale];
    }
    groups.push_back(std::move(g));
  }
  std::string out;
  for (auto it = groups.rbegin(); it != groups.rend(); ++it) {
    if (!out.empty()) out += ' ';
    out += *it;
  }
  return out;
}

std::string number_to_words(Millis ms) {
  if (ms < 0) throw std::invalid_argument("negative duration");
  const auto rounded = static_cast<std::uint64_t>((ms + 50) / 100 * 100);
  if (rounded == 0) return {};
  return cardinal_words(rounded);
}

std::optional<std::string_view> delay_qualifier(double z) {
  if (z >= 2.0) return "a significantly long delay";
  if (z >= 1.0) return "a long delay";
  return std::nullopt;
}

std::optional<std::string_view> rate_adverb(double z) {
  if (z < -2.0) return "very slowly";
  if (z < -1.0) return "slowly";
  if (z > 2.0) return "very quickly";
  if (z > 1.0) return "quickly";
  return std::nullopt;
}

std::optional<double> turn_rate_wpm(const TalkTurn& t) {
  if (t.duration_ms() <= 0) return std::nullopt;
  return static_cast<double>(t.tokens.size()) / (static_cast<double>(t.duration_ms()) / 60000.0);
}

namespace {

MomentPair moments(const std::vector<double>& v) {
  MomentPair m;
  if (v.empty()) return m;
  const auto s = summary_stats_or_zero(v);
  m.mean = s.mean;
  m.std = s.std;
  return m;
}

}  // namespace

WithinSessionStats within_session_stats(const Session& s) {
  std::vector<double> delays;
  for (auto d : delay_sequence(s)) delays.push_back(static_cast<double>(d));
  std::vector<double> rates;
  for (const auto& t : s.turns) {
    if (t.speaker != Speaker::Participant) continue;
    if (auto r = turn_rate_wpm(t)) rates.push_back(*r);
  }
  return {moments(delays), moments(rates)};
}

bool laughter_within(const LaughterEvent& e, const TalkTurn& t) {
  return e.start_ms >= t.start_ms && e.end_ms <= t.end_ms;
}

NarrativeDocument weave_narrative(const Session& s, const WithinSessionStats& stats) {
  NarrativeDocument doc;
  const auto delays = turn_delays(s);
  for (std::size_t i = 0; i < s.turns.size(); ++i) {
    const auto& t = s.turns[i];
    std::string line;
    auto add = [&line](std::string_view piece) {
      if (piece.empty()) return;
      if (!line.empty()) line.push_back(' ');
      line += piece;
    };
    if (t.speaker == Speaker::Interviewer) {
      add("the interviewer said");
    } else {
      if (delays[i]) {
        const auto words = number_to_words(*delays[i]);
        if (!words.empty()) add("after " + words + " milliseconds");
        if (const auto z = stats.delay.z(static_cast<double>(*delays[i]))) {
          if (const auto q = delay_qualifier(*z)) add(*q);
        }
      }
      add("the participant");
      for (const auto& e : s.laughter_events) {
        if (laughter_within(e, t)) {
          add("laughed and");
          break;
        }
      }
      if (const auto rate = turn_rate_wpm(t)) {
        if (const auto z = stats.rate.z(*rate)) {
          if (const auto adv = rate_adverb(*z)) add(*adv);
        }
      }
      add("said");
    }
    add(t.text);
    doc.turns.push_back({TurnKind::Utterance, std::move(line)});
  }
  return doc;
}

NarrativeDocument weave_narrative(const Session& s) { return weave_narrative(s, within_session_stats(s)); }

std::string_view to_string(InputConfig c) {
  switch (c) {
    case InputConfig::D: return "D";
    case InputConfig::DA: return "DA";
    case InputConfig::DAP: return "DAP";
    case InputConfig::DAPC: return "DAPC";
    case InputConfig::DAPN: return "DAPN";
    case InputConfig::DAPNC: return "DAPNC";
  }
  return "?";
}

InputConfig parse_input_config(std::string_view name) {
  for (auto c : kAllConfigs) {
    if (to_string(c) == name) return c;
  }
  throw std::invalid_argument("unknown input configuration '" + std::string(name) +
                              "' (expected D, DA, DAP, DAPC, DAPN or DAPNC)");
}

std::vector<Family> config_families(InputConfig c) {
  switch (c) {
    case InputConfig::D: return {Family::Demographics};
    case InputConfig::DA: return {Family::Demographics, Family::Actions};
    default: return {Family::Demographics, Family::Actions, Family::Prosody};
  }
}

bool config_has_comprehension(InputConfig c) { return c == InputConfig::DAPC || c == InputConfig::DAPNC; }
bool config_has_narrative(InputConfig c) { return c == InputConfig::DAPN || c == InputConfig::DAPNC; }
bool config_is_numeric(InputConfig c) {
  return c == InputConfig::D || c == InputConfig::DA || c == InputConfig::DAP;
}

NarrativeDocument assemble_input(const Session& s, const SessionFeatures& f, InputConfig config,
                                 const NarrativeContext& ctx) {
  if (!ctx.standardizer) throw std::invalid_argument("assemble_input: no standardizer");
  const auto families = config_families(config);
  NarrativeDocument doc = coarse_summary(f, *ctx.standardizer, families);
  if (config_has_comprehension(config)) {
    if (!ctx.comprehension) throw std::invalid_argument("assemble_input: no comprehension client");
    doc.append(comprehension_block(s, ctx.questions, *ctx.comprehension));
  }
  if (config_has_narrative(config)) doc.append(weave_narrative(s));
  return doc;
}

}  // namespace convnarr
