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
#ifndef CONVNARR_SYNTH_HPP
#define CONVNARR_SYNTH_HPP

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convnarr/corpus.hpp"

// Synthetic dyadic sessions with severity-dependent signals planted in
// response delay, speech rate, laughter, lexical content, facial action
// units and (label-independent) voice features that separate gender.

namespace convnarr::synth {

struct SynthParams {
  std::size_t n_sessions = 120;
  std::uint64_t seed = 0;

  // Severity: with probability severity_high_weight draw N(high_mean, high_sd),
  // otherwise |N(low_mean, low_sd)|; clamped to [0, 24].
  double severity_high_weight = 0.3;
  double severity_low_mean = 4.0, severity_low_sd = 3.0;
  double severity_high_mean = 14.0, severity_high_sd = 5.0;

  std::size_t exchanges = 12;  // interviewer question + participant answer

  double delay_base_ms = 500.0;
  double delay_slope_ms = 80.0;  // per PHQ point
  double delay_noise_ms = 400.0;

  double rate_base_wpm = 170.0;
  double rate_slope_wpm = -3.0;
  double rate_noise_wpm = 20.0;

  double laughter_base = 5.0;   // expected events at severity 0
  double laughter_slope = 0.2;  // fewer events per point

  // Probability that an answer sentence comes from the depressive list.
  double lexicon_base = 0.05;
  double lexicon_slope = 0.03;

  double au_slope = 1.0;  // scales the per-AU severity shifts
  double au_noise = 0.3;          // per frame
  double au_session_noise = 0.25; // per session and AU
  Millis au_frame_ms = 1000;

  std::size_t egemaps_windows = 10;
  double gender_f0_gap = 8.0;  // semitones between the gender means
  double egemaps_noise = 1.0;

  void check() const;

  static SynthParams strong(std::size_t n, std::uint64_t seed);
  // Every slope zero: labels carry no information about the sessions.
  static SynthParams null(std::size_t n, std::uint64_t seed);
};

std::span<const std::string_view> interviewer_script();
std::span<const std::string_view> depressive_sentences();
std::span<const std::string_view> neutral_sentences();

double sample_severity(const SynthParams& p, std::uint64_t seed);

Corpus generate(const SynthParams& params, std::size_t jobs = 1);

struct Channel {
  std::string name;
  double correlation = 0.0;  // Pearson, session value vs PHQ label
};

struct Description {
  std::size_t sessions = 0;
  double label_mean = 0.0;
  double label_std = 0.0;
  std::vector<Channel> channels;

  double correlation(std::string_view name) const;
  std::string to_json() const;
};

/// Empirical correlation of each planted channel with the labels. Sessions
/// without a label are ignored.
Description describe(const Corpus& corpus);

}  // namespace convnarr::synth

#endif  // CONVNARR_SYNTH_HPP
