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
#include "convnarr/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "convnarr/csv.hpp"

namespace convnarr {

namespace fs = std::filesystem;

const std::array<std::string_view, kEgemapsCount> kEgemapsDefaultColumns = {
    "F0semitoneFrom27.5Hz_sma3nz", "jitterLocal_sma3nz",   "shimmerLocaldB_sma3nz",
    "HNRdBACF_sma3nz",             "Loudness_sma3",        "alphaRatio_sma3",
    "hammarbergIndex_sma3",        "slope0-500_sma3",      "slope500-1500_sma3",
    "F1frequency_sma3nz",          "F1bandwidth_sma3nz",   "F2frequency_sma3nz",
    "F3frequency_sma3nz",          "mfcc1_sma3",           "mfcc2_sma3",
    "mfcc3_sma3"};

std::string_view to_string(Speaker s) {
  return s == Speaker::Interviewer ? "Interviewer" : "Participant";
}

std::string_view to_string(Gender g) { return g == Gender::Female ? "female" : "male"; }

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80;
}

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

void flush_token(std::string& chunk, std::vector<std::string>& out) {
  // Keep only apostrophes that sit between word characters.
  std::string token;
  for (std::size_t i = 0; i < chunk.size(); ++i) {
    if (chunk[i] != '\'') {
      token.push_back(chunk[i]);
      continue;
    }
    const bool left = !token.empty() && token.back() != '\'';
    bool right = false;
    for (std::size_t j = i + 1; j < chunk.size(); ++j) {
      if (chunk[j] != '\'') {
        right = true;
        break;
      }
    }
    if (left && right) token.push_back('\'');
  }
  if (!token.empty()) out.push_back(std::move(token));
  chunk.clear();
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string chunk;
  for (std::size_t i = 0; i < text.size(); ++i) {
    auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      flush_token(chunk, out);
      continue;
    }
    // U+2019 RIGHT SINGLE QUOTATION MARK is a typographic apostrophe.
    if (c == 0xE2 && i + 2 < text.size() && static_cast<unsigned char>(text[i + 1]) == 0x80 &&
        static_cast<unsigned char>(text[i + 2]) == 0x99) {
      chunk.push_back('\'');
      i += 2;
      continue;
    }
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    if (is_word_byte(c) || c == '\'') chunk.push_back(static_cast<char>(c));
  }
  flush_token(chunk, out);
  return out;
}

TalkTurn TalkTurn::make(Speaker speaker, Millis start_ms, Millis end_ms, std::string text) {
  TalkTurn t;
  t.speaker = speaker;
  t.start_ms = start_ms;
  t.end_ms = end_ms;
  t.tokens = tokenize(text);
  t.text = std::move(text);
  return t;
}

const Session* Corpus::find(std::string_view id) const {
  for (const auto& s : sessions) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

namespace {

[[noreturn]] void fail(const fs::path& file, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << file.string();
  if (line > 0) msg << ":" << line;
  msg << ": " << what;
  throw CorpusError(msg.str());
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  for (auto& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

std::int64_t parse_int(const std::string& raw, const fs::path& file, std::size_t line,
                       std::string_view column) {
  const std::string s = trim(raw);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    fail(file, line, "column '" + std::string(column) + "': expected an integer, got '" + raw + "'");
  }
  return v;
}

double parse_real(const std::string& raw, const fs::path& file, std::size_t line,
                  std::string_view column) {
  const std::string s = trim(raw);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    fail(file, line, "column '" + std::string(column) + "': expected a number, got '" + raw + "'");
  }
  return v;
}

csv::Table read_table(const fs::path& file) {
  try {
    return csv::read_file(file);
  } catch (const std::runtime_error& e) {
    throw CorpusError(e.what());
  }
}

void expect_header(const csv::Table& t, const fs::path& file,
                   const std::vector<std::string_view>& expected) {
  bool ok = t.header.size() == expected.size();
  for (std::size_t i = 0; ok && i < expected.size(); ++i) ok = lower(trim(t.header[i])) == expected[i];
  if (!ok) {
    std::string want;
    for (auto e : expected) want += (want.empty() ? "" : ",") + std::string(e);
    fail(file, 1, "expected header '" + want + "'");
  }
}

void expect_width(const csv::Row& row, std::size_t n, const fs::path& file) {
  if (row.fields.size() != n) {
    fail(file, row.line,
         "expected " + std::to_string(n) + " fields, found " + std::to_string(row.fields.size()));
  }
}

Speaker parse_speaker(const std::string& raw, const fs::path& file, std::size_t line) {
  const std::string s = lower(trim(raw));
  if (s == "interviewer" || s == "ellie") return Speaker::Interviewer;
  if (s == "participant") return Speaker::Participant;
  fail(file, line, "unknown speaker '" + raw + "'");
}

std::vector<TalkTurn> read_transcript(const fs::path& file) {
  const auto table = read_table(file);
  expect_header(table, file, {"speaker", "start_ms", "end_ms", "text"});
  std::vector<TalkTurn> turns;
  turns.reserve(table.rows.size());
  Millis prev_start = 0;
  for (const auto& row : table.rows) {
    expect_width(row, 4, file);
    const auto speaker = parse_speaker(row.fields[0], file, row.line);
    const Millis start = parse_int(row.fields[1], file, row.line, "start_ms");
    const Millis end = parse_int(row.fields[2], file, row.line, "end_ms");
    if (start < 0) fail(file, row.line, "start_ms is negative");
    if (end < start) {
      fail(file, row.line,
           "end_ms " + std::to_string(end) + " precedes start_ms " + std::to_string(start));
    }
    if (!turns.empty() && start < prev_start) {
      fail(file, row.line, "turn starts before the previous turn (start_ms " + std::to_string(start) +
                               " < " + std::to_string(prev_start) + ")");
    }
    prev_start = start;
    turns.push_back(TalkTurn::make(speaker, start, end, row.fields[3]));
  }
  return turns;
}

EgemapsTrack read_egemaps(const fs::path& file) {
  const auto table = read_table(file);
  if (table.header.size() != kEgemapsCount) {
    fail(file, 1, "expected " + std::to_string(kEgemapsCount) + " feature columns, found " +
                      std::to_string(table.header.size()));
  }
  EgemapsTrack track;
  for (std::size_t i = 0; i < kEgemapsCount; ++i) track.columns[i] = trim(table.header[i]);
  track.rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    expect_width(row, kEgemapsCount, file);
    std::array<double, kEgemapsCount> values{};
    for (std::size_t i = 0; i < kEgemapsCount; ++i) {
      values[i] = parse_real(row.fields[i], file, row.line, track.columns[i]);
    }
    track.rows.push_back(values);
  }
  return track;
}

std::vector<AuFrame> read_au(const fs::path& file) {
  const auto table = read_table(file);
  expect_header(table, file,
                {"frame_ms", "au5_r", "au17_r", "au20_r", "au25_r", "au5_c", "au17_c", "au20_c",
                 "au25_c"});
  std::vector<AuFrame> frames;
  frames.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    expect_width(row, 1 + 2 * kAuCount, file);
    AuFrame f;
    f.frame_ms = parse_int(row.fields[0], file, row.line, "frame_ms");
    for (std::size_t a = 0; a < kAuCount; ++a) {
      f.intensity[a] = parse_real(row.fields[1 + a], file, row.line, table.header[1 + a]);
      const double c = parse_real(row.fields[1 + kAuCount + a], file, row.line,
                                  table.header[1 + kAuCount + a]);
      if (c != 0.0 && c != 1.0) {
        fail(file, row.line, "presence column '" + table.header[1 + kAuCount + a] + "' must be 0 or 1");
      }
      f.presence[a] = static_cast<int>(c);
    }
    frames.push_back(f);
  }
  return frames;
}

std::vector<LaughterEvent> read_laughter(const fs::path& file) {
  const auto table = read_table(file);
  expect_header(table, file, {"start_ms", "end_ms"});
  std::vector<LaughterEvent> events;
  for (const auto& row : table.rows) {
    expect_width(row, 2, file);
    LaughterEvent e{parse_int(row.fields[0], file, row.line, "start_ms"),
                    parse_int(row.fields[1], file, row.line, "end_ms")};
    if (e.end_ms < e.start_ms) fail(file, row.line, "laughter end_ms precedes start_ms");
    events.push_back(e);
  }
  return events;
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(file, 0, "cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return trim(ss.str());
}

}  // namespace

Session parse_session(const fs::path& dir, std::string id) {
  Session s;
  s.id = std::move(id);
  const auto transcript = dir / "transcript.csv";
  if (!fs::exists(transcript)) fail(transcript, 0, "missing transcript");
  s.turns = read_transcript(transcript);
  if (fs::exists(dir / "egemaps.csv")) s.egemaps = read_egemaps(dir / "egemaps.csv");
  else
    for (std::size_t i = 0; i < kEgemapsCount; ++i) s.egemaps.columns[i] = kEgemapsDefaultColumns[i];
  if (fs::exists(dir / "au.csv")) s.au_frames = read_au(dir / "au.csv");
  if (fs::exists(dir / "laughter.csv")) s.laughter_events = read_laughter(dir / "laughter.csv");
  if (const auto label = dir / "label.txt"; fs::exists(label)) {
    const auto v = parse_int(read_text(label), label, 1, "phq");
    if (v < kPhqMin || v > kPhqMax) {
      fail(label, 1, "PHQ score " + std::to_string(v) + " outside [0, 24]");
    }
    s.phq = static_cast<int>(v);
  }
  if (const auto gender = dir / "gender.txt"; fs::exists(gender)) {
    const auto g = lower(read_text(gender));
    if (g == "female") s.gender = Gender::Female;
    else if (g == "male") s.gender = Gender::Male;
    else fail(gender, 1, "expected 'female' or 'male', got '" + g + "'");
  }
  return s;
}

Corpus parse_corpus(const fs::path& root) {
  const auto manifest = root / "manifest.csv";
  if (!fs::is_directory(root)) throw CorpusError(root.string() + ": not a directory");
  if (!fs::exists(manifest)) fail(manifest, 0, "missing corpus manifest");
  const auto table = read_table(manifest);
  if (table.header.empty() || lower(trim(table.header[0])) != "session" || table.header.size() > 2 ||
      (table.header.size() == 2 && lower(trim(table.header[1])) != "fold")) {
    fail(manifest, 1, "expected header 'session' or 'session,fold'");
  }
  Corpus corpus;
  bool any_fold = false;
  for (const auto& row : table.rows) {
    if (row.fields.size() == 1 && trim(row.fields[0]).empty()) continue;
    if (row.fields.empty() || row.fields.size() > table.header.size()) {
      fail(manifest, row.line, "expected " + std::to_string(table.header.size()) + " fields");
    }
    const std::string id = trim(row.fields[0]);
    if (id.empty()) fail(manifest, row.line, "empty session name");
    std::optional<int> fold;
    if (row.fields.size() == 2 && !trim(row.fields[1]).empty()) {
      fold = static_cast<int>(parse_int(row.fields[1], manifest, row.line, "fold"));
      any_fold = true;
    }
    corpus.sessions.push_back(parse_session(root / id, id));
    corpus.split_labels.push_back(fold);
  }
  if (!any_fold) corpus.split_labels.clear();
  return corpus;
}

void write_corpus(const Corpus& corpus, const fs::path& root) {
  fs::create_directories(root);
  auto open = [](const fs::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
  };
  const bool folds = !corpus.split_labels.empty();
  {
    auto out = open(root / "manifest.csv");
    out << (folds ? "session,fold\n" : "session\n");
    for (std::size_t i = 0; i < corpus.sessions.size(); ++i) {
      std::vector<std::string> f{corpus.sessions[i].id};
      if (folds) f.push_back(corpus.split_labels[i] ? std::to_string(*corpus.split_labels[i]) : "");
      out << csv::format_row(f);
    }
  }
  for (const auto& s : corpus.sessions) {
    const auto dir = root / s.id;
    fs::create_directories(dir);
    {
      auto out = open(dir / "transcript.csv");
      out << "speaker,start_ms,end_ms,text\n";
      for (const auto& t : s.turns) {
        out << csv::format_row({std::string(to_string(t.speaker)), std::to_string(t.start_ms),
                                std::to_string(t.end_ms), t.text});
      }
    }
    {
      auto out = open(dir / "egemaps.csv");
      out << csv::format_row({s.egemaps.columns.begin(), s.egemaps.columns.end()});
      for (const auto& row : s.egemaps.rows) {
        std::vector<std::string> f;
        for (double v : row) f.push_back(csv::format_double(v));
        out << csv::format_row(f);
      }
    }
    {
      auto out = open(dir / "au.csv");
      out << "frame_ms,au5_r,au17_r,au20_r,au25_r,au5_c,au17_c,au20_c,au25_c\n";
      for (const auto& fr : s.au_frames) {
        std::vector<std::string> f{std::to_string(fr.frame_ms)};
        for (double v : fr.intensity) f.push_back(csv::format_double(v));
        for (int v : fr.presence) f.push_back(std::to_string(v));
        out << csv::format_row(f);
      }
    }
    {
      auto out = open(dir / "laughter.csv");
      out << "start_ms,end_ms\n";
      for (const auto& e : s.laughter_events) out << e.start_ms << ',' << e.end_ms << '\n';
    }
    if (s.phq) open(dir / "label.txt") << *s.phq << '\n';
    else fs::remove(dir / "label.txt");
    if (s.gender) open(dir / "gender.txt") << to_string(*s.gender) << '\n';
    else fs::remove(dir / "gender.txt");
  }
}

std::vector<Violation> validate(const Corpus& corpus) {
  std::vector<Violation> out;
  std::set<std::string> seen;
  if (!corpus.split_labels.empty() && corpus.split_labels.size() != corpus.sessions.size()) {
    out.push_back({"", "fold assignment count does not match session count"});
  }
  for (const auto& s : corpus.sessions) {
    auto report = [&](std::string msg) { out.push_back({s.id, std::move(msg)}); };
    if (s.id.empty()) report("empty session id");
    if (!seen.insert(s.id).second) report("duplicate session id '" + s.id + "'");
    for (std::size_t i = 0; i < s.turns.size(); ++i) {
      const auto& t = s.turns[i];
      const std::string where = "turn " + std::to_string(i + 1) + ": ";
      if (t.start_ms < 0) report(where + "negative start_ms");
      if (t.end_ms < t.start_ms) report(where + "end_ms precedes start_ms");
      if (i > 0 && t.start_ms < s.turns[i - 1].start_ms) report(where + "turns not sorted by start_ms");
      if (t.tokens != tokenize(t.text)) report(where + "tokens do not match text");
    }
    for (std::size_t i = 0; i < s.laughter_events.size(); ++i) {
      if (s.laughter_events[i].end_ms < s.laughter_events[i].start_ms) {
        report("laughter event " + std::to_string(i + 1) + ": end_ms precedes start_ms");
      }
    }
    for (std::size_t i = 0; i < s.au_frames.size(); ++i) {
      for (int p : s.au_frames[i].presence) {
        if (p != 0 && p != 1) {
          report("au frame " + std::to_string(i + 1) + ": presence must be 0 or 1");
          break;
        }
      }
    }
    if (s.phq && (*s.phq < kPhqMin || *s.phq > kPhqMax)) {
      report("PHQ score " + std::to_string(*s.phq) + " outside [0, 24]");
    }
  }
  return out;
}

}  // namespace convnarr
