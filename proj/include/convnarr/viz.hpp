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
#ifndef CONVNARR_VIZ_HPP
#define CONVNARR_VIZ_HPP

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "convnarr/han.hpp"
#include "convnarr/narrative.hpp"

namespace convnarr::viz {

struct VizTurn {
  std::size_t index = 0;  // 1-based, contiguous
  char kind = 'U';        // narrative kind tag
  double z = 0.0;
  std::vector<std::string> tokens;
  std::vector<double> word_z;
};

struct VizDocument {
  std::string session_id;
  double predicted = 0.0;
  std::optional<double> truth;
  std::vector<VizTurn> turns;
};

// Word weights standardised over the whole session or within each turn.
enum class WordScope { Session, Turn };

/// Population z-scores; a singleton or constant series maps to zeros.
std::vector<double> standardize(std::span<const double> v);

/// `doc` is the encoded input the trace came from; `narrative`, when given,
/// supplies the kind tag of each turn.
VizDocument standardize_attention(const han::AttentionTrace& trace, const han::EncodedDoc& doc,
                                  const NarrativeDocument* narrative = nullptr,
                                  WordScope scope = WordScope::Session);

struct Style {
  double tier1 = 1.0;  // emphasis when z > tier1
  double tier2 = 2.0;  // strong emphasis when z > tier2
  std::string turn_tier1_background = "#fff5d6";
  std::string turn_tier2_background = "#ffe0a3";
  std::string turn_tier2_border = "#c77700";
  std::string word_rgb = "220,50,0";
  double word_tier1_opacity = 0.3;
  double word_tier2_opacity = 0.7;

  static Style from_json(std::string_view json);
  static Style load(const std::filesystem::path& path);
};

enum class Tier { None, Medium, Strong };
Tier tier_of(double z, const Style& style);

std::string html_escape(std::string_view s);

/// Self-contained HTML page: inline CSS, no scripts or external resources.
/// Turn numbers are drawn by CSS from a data attribute, so the text content of
/// <main> is exactly the token sequence.
std::string emit_html(const VizDocument& doc, const Style& style = {});

}  // namespace convnarr::viz

#endif  // CONVNARR_VIZ_HPP
