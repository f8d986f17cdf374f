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
#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "convnarr/clients.hpp"

namespace convnarr {

namespace {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw std::invalid_argument("URL without scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

nlohmann::json post_json(const RemoteOptions& opt, const nlohmann::json& body) {
  const auto ep = split_url(opt.url);
  httplib::Client client(ep.base);
  const auto secs = opt.timeout.count() / 1000;
  const auto usecs = (opt.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  httplib::Headers headers;
  if (!opt.api_key.empty()) headers.emplace("Authorization", "Bearer " + opt.api_key);

  std::string last_error;
  for (int attempt = 0; attempt <= opt.retries; ++attempt) {
    auto res = client.Post(ep.path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw std::runtime_error(opt.url + ": HTTP " + std::to_string(res->status));
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(opt.url + ": malformed response: " + e.what());
    }
  }
  throw TransportError(opt.url + ": " + last_error + " after " + std::to_string(opt.retries + 1) +
                       " attempt(s)");
}

double checked_unit(const nlohmann::json& j, const std::string& key, double hi, const std::string& url) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw std::runtime_error(url + ": response is missing numeric field '" + key + "'");
  }
  const double v = j[key].get<double>();
  if (!(v >= 0.0 && v <= hi)) {
    throw std::runtime_error(url + ": field '" + key + "' out of range");
  }
  return v;
}

}  // namespace

RemoteOptions remote_options_from_env(std::string_view url_variable) {
  RemoteOptions opt;
  const char* url = std::getenv(std::string(url_variable).c_str());
  if (!url || !*url) throw std::runtime_error(std::string(url_variable) + " is not set");
  opt.url = url;
  if (const char* key = std::getenv("CONVNARR_API_KEY")) opt.api_key = key;
  return opt;
}

RemotePersonalityClient::RemotePersonalityClient(RemoteOptions options) : options_(std::move(options)) {}

PersonalityResult RemotePersonalityClient::personality(std::string_view text) const {
  const auto j = post_json(options_, {{"text", std::string(text)}});
  PersonalityResult r;
  for (std::size_t t = 0; t < kTraitCount; ++t) {
    r.percentiles[t] = checked_unit(j, std::string(kTraitNames[t]), 100.0, options_.url);
  }
  return r;
}

RemoteComprehensionClient::RemoteComprehensionClient(RemoteOptions options)
    : options_(std::move(options)) {}

ComprehensionAnswer RemoteComprehensionClient::comprehend(std::string_view question,
                                                          std::string_view passage) const {
  const auto j = post_json(options_, {{"question", std::string(question)}, {"passage", std::string(passage)}});
  ComprehensionAnswer a;
  a.probability = checked_unit(j, "probability", 1.0, options_.url);
  if (!j.contains("answer") || !j["answer"].is_string()) {
    throw std::runtime_error(options_.url + ": response is missing string field 'answer'");
  }
  a.answer = j["answer"].get<std::string>();
  return a;
}

}  // namespace convnarr
