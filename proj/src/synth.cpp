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
#include "convnarr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "convnarr/evaluation.hpp"
#include "convnarr/features.hpp"
#include "convnarr/parallel.hpp"
#include "convnarr/rng.hpp"

namespace convnarr::synth {

namespace {

constexpr std::string_view kScript[] = {
    "how are you doing today",
    "where are you from originally",
    "what do you do for fun",
    "how have you been sleeping",
    "how have you been feeling lately",
    "what are you most proud of",
    "do you have trouble concentrating",
    "how is your appetite these days",
    "when was the last time you felt really happy",
    "what do you do when you are annoyed",
    "how do you cope with stress",
    "is there anything you regret",
    "tell me about your family",
    "what would you change about yourself",
};

// Keyed to the content words of the comprehension questions.
constexpr std::string_view kDepressive[] = {
    "i feel depressed most of the day",
    "i lose interest in almost everything",
    "i feel tired all the time",
    "i feel worthless",
    "i am not sleeping well at all",
    "i was diagnosed with depression",
    "i have been feeling down lately",
    "some days i feel like giving up",
    "i stay alone and avoid people",
    "i can't cope anymore",
};

constexpr std::string_view kNeutral[] = {
    "i grew up near the coast",
    "i enjoy cooking for friends",
    "work keeps me pretty busy",
    "we went hiking last weekend",
    "i watch movies with my brother",
    "my job is in sales",
    "i read a lot of books",
    "i play guitar on weekends",
    "things are fine at home",
    "my family lives nearby",
    "i am proud of my kids",
    "i travel whenever i can",
    "the weather was nice",
    "i walk the dog every morning",
};

// Severity shift per PHQ point for au5, au17, au20, au25 before au_slope.
constexpr double kAuShift[kAuCount] = {0.03, 0.06, 0.04, -0.04};
constexpr double kAuBase[kAuCount] = {1.0, 0.8, 0.9, 1.4};
constexpr double kPresenceThreshold = 1.0;

constexpr Millis kLaughMs = 600;
constexpr double kInterviewerWpm = 150.0;

Millis words_to_ms(std::size_t words, double wpm) {
  return static_cast<Millis>(std::llround(60000.0 * static_cast<double>(words) / wpm));
}

Session make_session(const SynthParams& p, std::size_t index) {
  Rng rng(derive_seed(p.seed, index + 1));
  Session s;
  char id[32];
  std::snprintf(id, sizeof id, "S%04zu", index + 1);
  s.id = id;
  const double sev = sample_severity(p, derive_seed(p.seed, 0x5e0000 + index));
  s.phq = std::clamp(static_cast<int>(std::lround(sev)), kPhqMin, kPhqMax);
  s.gender = rng.bernoulli(0.5) ? Gender::Female : Gender::Male;

  const double p_dep = std::clamp(p.lexicon_base + p.lexicon_slope * sev, 0.0, 1.0);
  Millis t = 0;
  std::vector<std::size_t> participant_turns;
  for (std::size_t e = 0; e < p.exchanges; ++e) {
    const auto q = std::string(kScript[e % std::size(kScript)]);
    const auto q_end = t + words_to_ms(tokenize(q).size(), kInterviewerWpm);
    s.turns.push_back(TalkTurn::make(Speaker::Interviewer, t, q_end, q));
    const double delay = std::max(0.0, rng.normal(p.delay_base_ms + p.delay_slope_ms * sev, p.delay_noise_ms));
    const Millis start = q_end + static_cast<Millis>(std::llround(delay));

    const std::size_t sentences = 1 + rng.below(3);
    std::string text;
    for (std::size_t k = 0; k < sentences; ++k) {
      if (k > 0) text += ". ";
      if (rng.uniform() < p_dep) {
        text += kDepressive[rng.below(std::size(kDepressive))];
      } else {
        text += kNeutral[rng.below(std::size(kNeutral))];
      }
    }
    const double wpm = std::max(40.0, rng.normal(p.rate_base_wpm + p.rate_slope_wpm * sev, p.rate_noise_wpm));
    const Millis end = start + words_to_ms(tokenize(text).size(), wpm);
    participant_turns.push_back(s.turns.size());
    s.turns.push_back(TalkTurn::make(Speaker::Participant, start, end, text));
    t = end + 300;
  }

  const auto laughs = rng.poisson(std::max(0.0, p.laughter_base - p.laughter_slope * sev));
  for (int l = 0; l < laughs; ++l) {
    const auto& turn = s.turns[participant_turns[rng.below(participant_turns.size())]];
    const Millis len = std::min(kLaughMs, turn.duration_ms());
    const Millis room = turn.duration_ms() - len;
    const Millis begin = turn.start_ms + (room > 0 ? static_cast<Millis>(rng.below(static_cast<std::uint64_t>(room) + 1)) : 0);
    s.laughter_events.push_back({begin, begin + len});
  }
  std::sort(s.laughter_events.begin(), s.laughter_events.end(),
            [](const LaughterEvent& a, const LaughterEvent& b) { return a.start_ms < b.start_ms; });

  std::array<double, kAuCount> au_offset{};
  for (auto& o : au_offset) o = rng.normal(0.0, p.au_session_noise);
  for (Millis f = 0; f <= t; f += p.au_frame_ms) {
    AuFrame fr;
    fr.frame_ms = f;
    for (std::size_t a = 0; a < kAuCount; ++a) {
      const double v = kAuBase[a] + p.au_slope * kAuShift[a] * sev + au_offset[a] + rng.normal(0.0, p.au_noise);
      fr.intensity[a] = std::clamp(std::round(std::max(0.0, v) * 1000.0) / 1000.0, 0.0, 5.0);
      fr.presence[a] = fr.intensity[a] > kPresenceThreshold ? 1 : 0;
    }
    s.au_frames.push_back(fr);
  }

  for (std::size_t c = 0; c < kEgemapsCount; ++c) s.egemaps.columns[c] = std::string(kEgemapsDefaultColumns[c]);
  const double sign = *s.gender == Gender::Female ? 0.5 : -0.5;
  for (std::size_t w = 0; w < p.egemaps_windows; ++w) {
    std::array<double, kEgemapsCount> row{};
    for (std::size_t c = 0; c < kEgemapsCount; ++c) {
      double mean = 10.0 + static_cast<double>(c);
      if (c == 0) mean = 30.0 + sign * p.gender_f0_gap;               // F0
      if (c >= 9 && c <= 12) mean += sign * p.gender_f0_gap * 0.5;    // formants
      row[c] = std::round(rng.normal(mean, p.egemaps_noise) * 1e4) / 1e4;
    }
    s.egemaps.rows.push_back(row);
  }
  return s;
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

void SynthParams::check() const {
  if (n_sessions < 1) throw std::invalid_argument("n_sessions must be >= 1");
  if (exchanges < 1) throw std::invalid_argument("exchanges must be >= 1");
  for (double v : {severity_low_sd, severity_high_sd, delay_noise_ms, rate_noise_wpm, au_noise, au_session_noise,
                   egemaps_noise}) {
    if (!(v >= 0.0)) throw std::invalid_argument("noise scales must be >= 0");
  }
  if (!(severity_high_weight >= 0.0 && severity_high_weight <= 1.0)) {
    throw std::invalid_argument("severity_high_weight must be in [0, 1]");
  }
  if (!(rate_base_wpm > 0.0)) throw std::invalid_argument("rate_base_wpm must be positive");
  if (au_frame_ms <= 0) throw std::invalid_argument("au_frame_ms must be positive");
  if (egemaps_windows < 1) throw std::invalid_argument("egemaps_windows must be >= 1");
}

SynthParams SynthParams::strong(std::size_t n, std::uint64_t seed) {
  SynthParams p;
  p.n_sessions = n;
  p.seed = seed;
  return p;
}

SynthParams SynthParams::null(std::size_t n, std::uint64_t seed) {
  SynthParams p = strong(n, seed);
  p.delay_slope_ms = 0.0;
  p.rate_slope_wpm = 0.0;
  p.laughter_slope = 0.0;
  p.lexicon_slope = 0.0;
  p.lexicon_base = 0.25;
  p.au_slope = 0.0;
  return p;
}

std::span<const std::string_view> interviewer_script() { return kScript; }
std::span<const std::string_view> depressive_sentences() { return kDepressive; }
std::span<const std::string_view> neutral_sentences() { return kNeutral; }

double sample_severity(const SynthParams& p, std::uint64_t seed) {
  Rng rng(seed);
  double s = rng.uniform() < p.severity_high_weight ? rng.normal(p.severity_high_mean, p.severity_high_sd)
                                                      : std::abs(rng.normal(p.severity_low_mean, p.severity_low_sd));
  return std::clamp(s, 0.0, 24.0);
}

Corpus generate(const SynthParams& params, std::size_t jobs) {
  params.check();
  Corpus c;
  c.sessions.resize(params.n_sessions);
  parallel_for(params.n_sessions, jobs, [&](std::size_t i) { c.sessions[i] = make_session(params, i); });
  return c;
}

double Description::correlation(std::string_view name) const {
  for (const auto& ch : channels) {
    if (ch.name == name) return ch.correlation;
  }
  throw std::invalid_argument("no channel named '" + std::string(name) + "'");
}

std::string Description::to_json() const {
  nlohmann::json j = {{"sessions", sessions}, {"label_mean", label_mean}, {"label_std", label_std}};
  nlohmann::json ch = nlohmann::json::object();
  for (const auto& c : channels) ch[c.name] = c.correlation;
  j["correlations"] = std::move(ch);
  return j.dump(2) + "\n";
}

Description describe(const Corpus& corpus) {
  const std::set<std::string_view> depressive(std::begin(kDepressive), std::end(kDepressive));
  std::vector<double> labels, delay, rate, laughter, lexicon, au17, words;
  for (const auto& s : corpus.sessions) {
    if (!s.phq) continue;
    labels.push_back(*s.phq);
    std::vector<double> d;
    for (auto v : delay_sequence(s)) d.push_back(static_cast<double>(v));
    delay.push_back(mean_of(d));
    rate.push_back(avg_speech_rate(s));
    laughter.push_back(static_cast<double>(laughter_count(s)));
    std::size_t dep = 0, total = 0;
    for (const auto& t : s.turns) {
      if (t.speaker != Speaker::Participant) continue;
      std::string_view text = t.text;
      std::size_t pos = 0;
      while (pos <= text.size()) {
        const auto next = text.find(". ", pos);
        const auto sentence = text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
        ++total;
        dep += depressive.count(sentence);
        if (next == std::string_view::npos) break;
        pos = next + 2;
      }
    }
    lexicon.push_back(total == 0 ? 0.0 : static_cast<double>(dep) / static_cast<double>(total));
    std::vector<double> au;
    for (const auto& f : s.au_frames) au.push_back(f.intensity[1]);
    au17.push_back(mean_of(au));
    words.push_back(static_cast<double>(talkativeness(s).total_words));
  }
  Description out;
  out.sessions = labels.size();
  if (labels.empty()) return out;
  out.label_mean = mean_of(labels);
  double var = 0.0;
  for (double x : labels) var += (x - out.label_mean) * (x - out.label_mean);
  out.label_std = std::sqrt(var / static_cast<double>(labels.size()));
  if (labels.size() < 2) return out;
  out.channels = {{"delay", pcc(delay, labels)},       {"speech_rate", pcc(rate, labels)},
                  {"laughter", pcc(laughter, labels)}, {"lexicon", pcc(lexicon, labels)},
                  {"au17", pcc(au17, labels)},         {"total_words", pcc(words, labels)}};
  return out;
}

}  // namespace convnarr::synth
