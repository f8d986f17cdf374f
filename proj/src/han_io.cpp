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
#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "convnarr/han.hpp"

namespace convnarr::han {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'C', 'N', 'V', 'H', 'A', 'N', '\0', '\0'};

template <typename T>
void put_le(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.append(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos, const std::string& what) {
  if (pos + sizeof(T) > in.size()) throw std::runtime_error("checkpoint truncated while reading " + what);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  pos += sizeof(T);
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

json config_json(const HanConfig& c) {
  return {{"embedding_dim", c.embedding_dim},
          {"gru_units", c.gru_units},
          {"learning_rate", c.learning_rate},
          {"gru_dropout", c.gru_dropout},
          {"recurrent_dropout", c.recurrent_dropout},
          {"l2", c.l2},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"bidirectional", c.bidirectional},
          {"max_turns", c.max_turns},
          {"max_words", c.max_words},
          {"clip_norm", c.clip_norm}};
}

HanConfig config_from_json(const json& j) {
  HanConfig c;
  c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  c.gru_units = j.at("gru_units").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.gru_dropout = j.at("gru_dropout").get<double>();
  c.recurrent_dropout = j.at("recurrent_dropout").get<double>();
  c.l2 = j.at("l2").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.epochs = j.at("epochs").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.bidirectional = j.at("bidirectional").get<bool>();
  c.max_turns = j.at("max_turns").get<std::size_t>();
  c.max_words = j.at("max_words").get<std::size_t>();
  c.clip_norm = j.value("clip_norm", 0.0);
  return c;
}

}  // namespace

EmbeddingSpec EmbeddingSpec::describe(const EmbeddingTable& table) {
  EmbeddingSpec s;
  s.dim = table.dimension();
  s.seed = table.seed();
  if (table.kind() == EmbeddingTable::Kind::Hashed) {
    s.kind = "hashed";
    s.scale = table.scale();
  } else {
    s.kind = "file";
    s.path = table.source().string();
  }
  return s;
}

EmbeddingTable EmbeddingSpec::materialize() const {
  if (kind == "hashed") return EmbeddingTable::hashed(dim, seed, scale);
  if (kind == "file") {
    auto t = EmbeddingTable::load(path, seed);
    if (t.dimension() != dim) {
      throw std::runtime_error("embedding file " + path + " has dimension " + std::to_string(t.dimension()) +
                               ", model expects " + std::to_string(dim));
    }
    return t;
  }
  throw std::runtime_error("unknown embedding kind '" + kind + "'");
}

std::string checkpoint_bytes(const HanModel& model) {
  json header = {{"config", config_json(model.config)},
                 {"parameter_count", model.params.size()},
                 {"layout", {{"total", model.layout.total}, {"bidirectional", model.layout.bidirectional}}},
                 {"embeddings",
                  {{"kind", model.embeddings.kind},
                   {"dim", model.embeddings.dim},
                   {"seed", model.embeddings.seed},
                   {"scale", model.embeddings.scale},
                   {"path", model.embeddings.path}}}};
  const std::string h = header.dump();
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, h.size());
  out += h;
  for (double p : model.params) put_le<double>(out, p);
  return out;
}

void save_checkpoint(const HanModel& model, const std::filesystem::path& path) {
  const auto bytes = checkpoint_bytes(model);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write checkpoint " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("failed writing checkpoint " + path.string());
}

HanModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string in = ss.str();
  const std::string where = path.string() + ": ";
  if (in.size() < sizeof(kMagic) || std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(where + "not a HAN checkpoint (bad magic)");
  }
  std::size_t pos = sizeof(kMagic);
  const auto version = get_le<std::uint32_t>(in, pos, "version");
  if (version != kCheckpointVersion) {
    throw std::runtime_error(where + "unsupported checkpoint version " + std::to_string(version));
  }
  const auto hlen = get_le<std::uint64_t>(in, pos, "header length");
  if (hlen > in.size() - pos) throw std::runtime_error(where + "checkpoint truncated in header");
  json header;
  try {
    header = json::parse(in.substr(pos, hlen));
  } catch (const json::exception& e) {
    throw std::runtime_error(where + "corrupt checkpoint header: " + e.what());
  }
  pos += hlen;

  HanModel m;
  try {
    m.config = config_from_json(header.at("config"));
    const auto& e = header.at("embeddings");
    m.embeddings.kind = e.at("kind").get<std::string>();
    m.embeddings.dim = e.at("dim").get<std::size_t>();
    m.embeddings.seed = e.at("seed").get<std::uint64_t>();
    m.embeddings.scale = e.at("scale").get<double>();
    m.embeddings.path = e.at("path").get<std::string>();
  } catch (const json::exception& e) {
    throw std::runtime_error(where + "checkpoint header is missing fields: " + e.what());
  }
  m.config.check();
  m.layout = Layout::make(m.config.embedding_dim, m.config.gru_units, m.config.bidirectional);
  const auto count = header.value("parameter_count", std::size_t{0});
  if (count != m.layout.total) {
    throw std::runtime_error(where + "parameter count " + std::to_string(count) + " does not match the layout (" +
                             std::to_string(m.layout.total) + ")");
  }
  if (in.size() - pos != count * sizeof(double)) {
    throw std::runtime_error(where + "checkpoint parameter block has the wrong size");
  }
  m.params.resize(count);
  for (auto& p : m.params) p = get_le<double>(in, pos, "parameters");
  return m;
}

std::string trace_to_json(const AttentionTrace& trace, const EncodedDoc& doc) {
  json turns = json::array();
  for (std::size_t j = 0; j < trace.turn_weights.size(); ++j) {
    json t = {{"turn", j < doc.source_turn.size() ? doc.source_turn[j] : j}, {"weight", trace.turn_weights[j]}};
    json words = json::array();
    if (j < trace.word_weights.size()) {
      for (std::size_t w = 0; w < trace.word_weights[j].size(); ++w) {
        words.push_back({{"token", j < doc.tokens.size() && w < doc.tokens[j].size() ? doc.tokens[j][w] : ""},
                         {"weight", trace.word_weights[j][w]}});
      }
    }
    t["words"] = std::move(words);
    turns.push_back(std::move(t));
  }
  return json{{"turns", turns}}.dump(2);
}

}  // namespace convnarr::han
