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
#include "convnarr/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "convnarr/rng.hpp"

namespace convnarr {

std::optional<SummaryStats> summary_stats(std::span<const double> series) {
  if (series.empty()) return std::nullopt;
  SummaryStats s;
  s.min = *std::min_element(series.begin(), series.end());
  s.max = *std::max_element(series.begin(), series.end());
  const double n = static_cast<double>(series.size());
  s.mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : series) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / n);
  // Keep min <= mean <= max under rounding.
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

SummaryStats summary_stats_or_zero(std::span<const double> series) {
  return summary_stats(series).value_or(SummaryStats{});
}

namespace {

constexpr std::array<Family, 3> kAllFamilies = {Family::Demographics, Family::Actions, Family::Prosody};
constexpr std::array<std::string_view, 5> kStatSuffix = {"min", "max", "mean", "std", "count"};

}  // namespace

std::span<const Family> all_families() { return kAllFamilies; }

std::vector<std::string> feature_names(std::span<const Family> families) {
  std::vector<std::string> names;
  for (Family f : families) {
    switch (f) {
      case Family::Demographics:
        names.insert(names.end(), {"total_words", "distinct_words"});
        for (auto t : kTraitNames) names.emplace_back(t);
        names.insert(names.end(), {"gender_female", "gender_male"});
        break;
      case Family::Actions:
        names.emplace_back("laughter_count");
        for (auto au : kAuIds) {
          for (auto suffix : kStatSuffix) names.push_back(std::string(au) + "_" + std::string(suffix));
        }
        break;
      case Family::Prosody:
        names.insert(names.end(), {"delay_min", "delay_max", "delay_mean", "delay_std", "speech_rate"});
        break;
    }
  }
  return names;
}

std::vector<double> feature_vector(const SessionFeatures& f, std::span<const Family> families) {
  std::vector<double> v;
  for (Family fam : families) {
    switch (fam) {
      case Family::Demographics: {
        v.push_back(static_cast<double>(f.total_words));
        v.push_back(static_cast<double>(f.distinct_words));
        v.insert(v.end(), f.big5.begin(), f.big5.end());
        const auto oh = f.gender_onehot();
        v.insert(v.end(), oh.begin(), oh.end());
        break;
      }
      case Family::Actions:
        v.push_back(static_cast<double>(f.laughter_count));
        for (const auto& au : f.au) {
          v.insert(v.end(), {au.intensity.min, au.intensity.max, au.intensity.mean, au.intensity.std,
                             static_cast<double>(au.presence_count)});
        }
        break;
      case Family::Prosody:
        v.insert(v.end(), {f.delay.min, f.delay.max, f.delay.mean, f.delay.std, f.speech_rate_wpm});
        break;
    }
  }
  return v;
}

Talkativeness talkativeness(const Session& s) {
  Talkativeness t;
  std::set<std::string> distinct;
  for (const auto& turn : s.turns) {
    if (turn.speaker != Speaker::Participant) continue;
    t.total_words += turn.tokens.size();
    distinct.insert(turn.tokens.begin(), turn.tokens.end());
  }
  t.distinct_words = distinct.size();
  return t;
}

std::size_t laughter_count(const Session& s) { return s.laughter_events.size(); }

std::array<AuStats, kAuCount> au_summary(const Session& s) {
  std::array<AuStats, kAuCount> out{};
  std::vector<double> series(s.au_frames.size());
  for (std::size_t a = 0; a < kAuCount; ++a) {
    std::size_t present = 0;
    for (std::size_t i = 0; i < s.au_frames.size(); ++i) {
      series[i] = s.au_frames[i].intensity[a];
      present += s.au_frames[i].presence[a] == 1 ? 1 : 0;
    }
    out[a].intensity = summary_stats_or_zero(series);
    out[a].presence_count = present;
  }
  return out;
}

std::vector<std::optional<Millis>> turn_delays(const Session& s) {
  std::vector<std::optional<Millis>> out(s.turns.size());
  for (std::size_t i = 1; i < s.turns.size(); ++i) {
    if (s.turns[i].speaker == Speaker::Participant && s.turns[i - 1].speaker == Speaker::Interviewer) {
      out[i] = std::max<Millis>(0, s.turns[i].start_ms - s.turns[i - 1].end_ms);
    }
  }
  return out;
}

std::vector<Millis> delay_sequence(const Session& s) {
  std::vector<Millis> out;
  for (const auto& d : turn_delays(s)) {
    if (d) out.push_back(*d);
  }
  return out;
}

double avg_speech_rate(const Session& s) {
  std::size_t words = 0;
  Millis duration = 0;
  for (const auto& t : s.turns) {
    if (t.speaker != Speaker::Participant) continue;
    words += t.tokens.size();
    duration += t.duration_ms();
  }
  if (duration <= 0) {
    spdlog::warn("session {}: no participant talk time, speech rate set to 0", s.id);
    return 0.0;
  }
  return static_cast<double>(words) / (static_cast<double>(duration) / 60000.0);
}

std::string participant_text(const Session& s) {
  std::string text;
  for (const auto& t : s.turns) {
    if (t.speaker != Speaker::Participant) continue;
    if (!text.empty()) text.push_back('\n');
    text += t.text;
  }
  return text;
}

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double GenderModel::female_probability(const std::array<double, kEgemapsCount>& row) const {
  double z = bias;
  for (std::size_t j = 0; j < kEgemapsCount; ++j) z += weights[j] * (row[j] - mean[j]) / scale[j];
  return sigmoid(z);
}

GenderModel train_gender_model(std::span<const std::array<double, kEgemapsCount>> rows,
                               std::span<const Gender> labels, const GenderTrainOptions& opt) {
  if (rows.size() != labels.size()) throw std::invalid_argument("gender rows/labels size mismatch");
  const bool has_f = std::find(labels.begin(), labels.end(), Gender::Female) != labels.end();
  const bool has_m = std::find(labels.begin(), labels.end(), Gender::Male) != labels.end();
  if (!has_f || !has_m) throw std::invalid_argument("gender model needs both classes in training data");

  GenderModel m;
  const double n = static_cast<double>(rows.size());
  for (std::size_t j = 0; j < kEgemapsCount; ++j) {
    double sum = 0.0;
    for (const auto& r : rows) sum += r[j];
    m.mean[j] = sum / n;
    double ss = 0.0;
    for (const auto& r : rows) ss += (r[j] - m.mean[j]) * (r[j] - m.mean[j]);
    const double sd = std::sqrt(ss / n);
    m.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  std::vector<std::array<double, kEgemapsCount>> z(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < kEgemapsCount; ++j) z[i][j] = (rows[i][j] - m.mean[j]) / m.scale[j];
  }
  for (int it = 0; it < opt.iterations; ++it) {
    std::array<double, kEgemapsCount> gw{};
    double gb = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      double logit = m.bias;
      for (std::size_t j = 0; j < kEgemapsCount; ++j) logit += m.weights[j] * z[i][j];
      const double err = sigmoid(logit) - (labels[i] == Gender::Female ? 1.0 : 0.0);
      for (std::size_t j = 0; j < kEgemapsCount; ++j) gw[j] += err * z[i][j];
      gb += err;
    }
    for (std::size_t j = 0; j < kEgemapsCount; ++j) {
      m.weights[j] -= opt.learning_rate * (gw[j] / n + 2.0 * opt.l2 * m.weights[j]);
    }
    m.bias -= opt.learning_rate * gb / n;
  }
  for (double w : m.weights) {
    if (!std::isfinite(w)) throw std::runtime_error("gender model diverged");
  }
  return m;
}

GenderModel train_gender_model(std::span<const Session> sessions, const GenderTrainOptions& opt) {
  std::vector<std::array<double, kEgemapsCount>> rows;
  std::vector<Gender> labels;
  for (const auto& s : sessions) {
    if (!s.gender) continue;
    for (const auto& r : s.egemaps.rows) {
      rows.push_back(r);
      labels.push_back(*s.gender);
    }
  }
  return train_gender_model(rows, labels, opt);
}

GenderPrediction predict_gender(const GenderModel& model, const EgemapsTrack& egemaps) {
  if (egemaps.rows.empty()) throw std::invalid_argument("cannot predict gender without egemaps windows");
  double sum = 0.0;
  for (const auto& r : egemaps.rows) sum += model.female_probability(r);
  const double p = sum / static_cast<double>(egemaps.rows.size());
  return {p >= 0.5 ? Gender::Female : Gender::Male, p};
}

double cross_validated_gender_accuracy(std::span<const std::array<double, kEgemapsCount>> rows,
                                       std::span<const Gender> labels, int k, std::uint64_t seed,
                                       const GenderTrainOptions& opt) {
  if (k < 2 || static_cast<std::size_t>(k) > rows.size()) throw std::invalid_argument("invalid k");
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<int> fold(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) fold[order[i]] = static_cast<int>(i % k);

  std::size_t correct = 0;
  for (int f = 0; f < k; ++f) {
    std::vector<std::array<double, kEgemapsCount>> tr;
    std::vector<Gender> tl;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (fold[i] != f) {
        tr.push_back(rows[i]);
        tl.push_back(labels[i]);
      }
    }
    const auto model = train_gender_model(tr, tl, opt);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (fold[i] != f) continue;
      const Gender g = model.female_probability(rows[i]) >= 0.5 ? Gender::Female : Gender::Male;
      correct += g == labels[i] ? 1 : 0;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

SessionFeatures assemble_features(const Session& s, const GenderModel& gender_model,
                                  const PersonalityClient& personality) {
  SessionFeatures f;
  const auto talk = talkativeness(s);
  f.total_words = talk.total_words;
  f.distinct_words = talk.distinct_words;
  f.big5 = personality.personality(participant_text(s)).percentiles;
  f.gender = predict_gender(gender_model, s.egemaps).gender;
  f.laughter_count = laughter_count(s);
  f.au = au_summary(s);
  const auto delays = delay_sequence(s);
  std::vector<double> d(delays.begin(), delays.end());
  f.delay = summary_stats_or_zero(d);
  f.speech_rate_wpm = avg_speech_rate(s);
  return f;
}

}  // namespace convnarr
