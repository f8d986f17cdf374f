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
#include "convnarr/viz.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace convnarr::viz {

std::vector<double> standardize(std::span<const double> v) {
  std::vector<double> z(v.size(), 0.0);
  if (v.size() < 2) return z;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  const double sd = std::sqrt(var);
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) return z;
  for (std::size_t i = 0; i < v.size(); ++i) z[i] = (v[i] - mean) / sd;
  return z;
}

VizDocument standardize_attention(const han::AttentionTrace& trace, const han::EncodedDoc& doc,
                                  const NarrativeDocument* narrative, WordScope scope) {
  if (trace.turn_weights.empty()) throw std::invalid_argument("empty attention trace");
  if (trace.turn_weights.size() != doc.turn_count() || trace.word_weights.size() != doc.turn_count()) {
    throw std::invalid_argument("attention trace does not match the encoded document");
  }
  VizDocument out;
  const auto turn_z = standardize(trace.turn_weights);
  std::vector<double> all_words;
  for (std::size_t j = 0; j < doc.turn_count(); ++j) {
    if (trace.word_weights[j].size() != doc.tokens[j].size()) {
      throw std::invalid_argument("word attention of turn " + std::to_string(j + 1) + " has the wrong length");
    }
    all_words.insert(all_words.end(), trace.word_weights[j].begin(), trace.word_weights[j].end());
  }
  const auto session_z = standardize(all_words);
  std::size_t offset = 0;
  for (std::size_t j = 0; j < doc.turn_count(); ++j) {
    VizTurn t;
    t.index = j + 1;
    t.z = turn_z[j];
    t.tokens = doc.tokens[j];
    const std::size_t src = j < doc.source_turn.size() ? doc.source_turn[j] : j;
    if (narrative != nullptr && src < narrative->turns.size()) t.kind = kind_tag(narrative->turns[src].kind);
    if (scope == WordScope::Session) {
      t.word_z.assign(session_z.begin() + static_cast<std::ptrdiff_t>(offset),
                      session_z.begin() + static_cast<std::ptrdiff_t>(offset + t.tokens.size()));
    } else {
      t.word_z = standardize(trace.word_weights[j]);
    }
    offset += t.tokens.size();
    out.turns.push_back(std::move(t));
  }
  return out;
}

namespace {

void check_css_value(const std::string& key, const std::string& v) {
  static const std::regex ok("[#A-Za-z0-9(),. %-]+");
  if (!std::regex_match(v, ok)) throw std::invalid_argument("style value for '" + key + "' is not a plain CSS value");
}

std::string fmt(double v, const char* spec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

Style Style::from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  Style s;
  s.tier1 = j.value("tier1", s.tier1);
  s.tier2 = j.value("tier2", s.tier2);
  s.turn_tier1_background = j.value("turn_tier1_background", s.turn_tier1_background);
  s.turn_tier2_background = j.value("turn_tier2_background", s.turn_tier2_background);
  s.turn_tier2_border = j.value("turn_tier2_border", s.turn_tier2_border);
  s.word_rgb = j.value("word_rgb", s.word_rgb);
  s.word_tier1_opacity = j.value("word_tier1_opacity", s.word_tier1_opacity);
  s.word_tier2_opacity = j.value("word_tier2_opacity", s.word_tier2_opacity);
  if (!(s.tier2 >= s.tier1)) throw std::invalid_argument("style: tier2 must be >= tier1");
  check_css_value("turn_tier1_background", s.turn_tier1_background);
  check_css_value("turn_tier2_background", s.turn_tier2_background);
  check_css_value("turn_tier2_border", s.turn_tier2_border);
  check_css_value("word_rgb", s.word_rgb);
  return s;
}

Style Style::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open style file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return from_json(ss.str());
}

Tier tier_of(double z, const Style& style) {
  if (z > style.tier2) return Tier::Strong;
  if (z > style.tier1) return Tier::Medium;
  return Tier::None;
}

std::string html_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string emit_html(const VizDocument& doc, const Style& style) {
  std::ostringstream h;
  const std::string title = "Session " + html_escape(doc.session_id);
  h << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>" << title << "</title>\n"
    << "<style>\n"
    << "body{font-family:Georgia,serif;max-width:52em;margin:2em auto;color:#222}\n"
    << "header{border-bottom:1px solid #ccc;margin-bottom:1em}\n"
    << ".turn{position:relative;margin:.3em 0;padding:.2em .4em .2em 3.5em;line-height:1.6}\n"
    << ".turn::before{content:attr(data-n);position:absolute;left:0;width:2.8em;text-align:right;color:#888}\n"
    << ".kS,.kQ,.kA{font-style:italic}\n"
    << ".t1{background:" << style.turn_tier1_background << "}\n"
    << ".t2{background:" << style.turn_tier2_background << ";border-left:4px solid " << style.turn_tier2_border
    << "}\n"
    << ".w1{background:rgba(" << style.word_rgb << "," << fmt(style.word_tier1_opacity, "%.2f") << ")}\n"
    << ".w2{background:rgba(" << style.word_rgb << "," << fmt(style.word_tier2_opacity, "%.2f") << ")}\n"
    << "</style>\n</head>\n<body>\n<header>\n<h1>" << title << "</h1>\n<p>Predicted PHQ-8: "
    << fmt(doc.predicted, "%.1f");
  if (doc.truth) h << " &middot; True PHQ-8: " << fmt(*doc.truth, "%.0f");
  h << "</p>\n</header>\n<main>\n";
  for (const auto& t : doc.turns) {
    h << "<div class=\"turn k" << t.kind;
    switch (tier_of(t.z, style)) {
      case Tier::Strong: h << " t2"; break;
      case Tier::Medium: h << " t1"; break;
      case Tier::None: break;
    }
    h << "\" data-n=\"" << t.index << "\">";
    for (std::size_t w = 0; w < t.tokens.size(); ++w) {
      if (w > 0) h << ' ';
      const auto tok = html_escape(t.tokens[w]);
      const double z = w < t.word_z.size() ? t.word_z[w] : 0.0;
      switch (tier_of(z, style)) {
        case Tier::Strong: h << "<span class=\"w2\">" << tok << "</span>"; break;
        case Tier::Medium: h << "<span class=\"w1\">" << tok << "</span>"; break;
        case Tier::None: h << tok; break;
      }
    }
    h << "</div>\n";
  }
  h << "</main>\n</body>\n</html>\n";
  return h.str();
}

}  // namespace convnarr::viz
