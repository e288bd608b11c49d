// Copyright 2026 The trizx Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TRIZX_REMOTE_HPP_
#define TRIZX_REMOTE_HPP_

// HTTP-backed implementations of LlmBackend and Embedder.

#include <chrono>
#include <cstdlib>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "trizx/embedding.hpp"
#include "trizx/error.hpp"
#include "trizx/llm.hpp"

namespace trizx {

struct HttpEndpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // "" or "/prefix", never a trailing slash
};

inline HttpEndpoint parse_endpoint(std::string_view url) {
  const auto scheme = url.find("://");
  if (scheme == std::string_view::npos) {
    throw ConfigError("URL needs a scheme: " + std::string(url));
  }
  const auto slash = url.find('/', scheme + 3);
  HttpEndpoint ep;
  ep.origin = std::string(url.substr(0, slash));
  if (slash != std::string_view::npos) ep.path = std::string(url.substr(slash));
  while (!ep.path.empty() && ep.path.back() == '/') ep.path.pop_back();
  return ep;
}

struct RetryPolicy {
  int max_retries = 2;  // attempts = 1 + max_retries
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::milliseconds timeout{30000};
};

namespace detail {

inline std::string getenv_or(const char* name, std::string fallback = {}) {
  const char* v = std::getenv(name);
  return v != nullptr ? std::string(v) : fallback;
}

// POSTs JSON with retries on transport failure, 429 and 5xx. Other non-2xx
// statuses fail immediately.
inline nlohmann::json post_json(const HttpEndpoint& ep, const std::string& path,
                                const nlohmann::json& body, const RetryPolicy& policy,
                                const httplib::Headers& headers = {}) {
  const std::string payload = body.dump();
  const int attempts = 1 + std::max(0, policy.max_retries);
  std::string last_error;
  auto backoff = policy.initial_backoff;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    httplib::Client cli(ep.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(policy.timeout);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(policy.timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());

    auto res = cli.Post(ep.path + path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
    } else if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
    } else if (res->status < 200 || res->status >= 300) {
      throw BackendError("HTTP " + std::to_string(res->status) + " from " +
                             ep.origin + ep.path + path,
                         attempt);
    } else {
      auto j = nlohmann::json::parse(res->body, nullptr, false);
      if (j.is_discarded()) {
        throw BackendError("non-JSON response from " + ep.origin + ep.path + path, attempt);
      }
      return j;
    }
    if (attempt < attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw BackendError(last_error + " after " + std::to_string(attempts) + " attempts",
                     attempts);
}

}  // namespace detail

struct RemoteBackendConfig {
  std::string url;  // base URL; requests go to <url>/chat/completions
  std::string model;
  std::string api_key;
  RetryPolicy retry;

  // TRN_BACKEND_URL (required), TRN_BACKEND_MODEL, TRN_BACKEND_KEY,
  // TRN_TIMEOUT_MS.
  static RemoteBackendConfig from_env() {
    RemoteBackendConfig c;
    c.url = detail::getenv_or("TRN_BACKEND_URL");
    if (c.url.empty()) throw ConfigError("TRN_BACKEND_URL is not set");
    c.model = detail::getenv_or("TRN_BACKEND_MODEL", "gpt-4");
    c.api_key = detail::getenv_or("TRN_BACKEND_KEY");
    const auto timeout = detail::getenv_or("TRN_TIMEOUT_MS");
    if (!timeout.empty()) {
      try {
        c.retry.timeout = std::chrono::milliseconds(std::stol(timeout));
      } catch (const std::exception&) {
        throw ConfigError("TRN_TIMEOUT_MS is not a number: " + timeout);
      }
    }
    return c;
  }
};

// Chat-completion style endpoint, temperature 0, single user message.
class RemoteBackend final : public LlmBackend {
 public:
  explicit RemoteBackend(RemoteBackendConfig cfg)
      : cfg_(std::move(cfg)), ep_(parse_endpoint(cfg_.url)) {}

  std::string complete(const std::string& prompt_text) const override {
    const nlohmann::json body = {
        {"model", cfg_.model},
        {"temperature", 0},
        {"messages", {{{"role", "user"}, {"content", prompt_text}}}}};
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
    const auto j = detail::post_json(ep_, "/chat/completions", body, cfg_.retry, headers);
    try {
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw BackendError("completion response lacks choices[0].message.content");
    }
  }

  std::string id() const override { return "remote/" + cfg_.model; }

 private:
  RemoteBackendConfig cfg_;
  HttpEndpoint ep_;
};

struct RemoteEmbedderConfig {
  std::string url;  // POST target for {"texts": [...]}
  std::size_t dim = kDefaultEmbeddingDim;
  RetryPolicy retry;

  // TRN_EMBEDDER_URL (required) and TRN_TIMEOUT_MS.
  static RemoteEmbedderConfig from_env(std::size_t dim) {
    RemoteEmbedderConfig c;
    c.url = detail::getenv_or("TRN_EMBEDDER_URL");
    if (c.url.empty()) throw ConfigError("TRN_EMBEDDER_URL is not set");
    c.dim = dim;
    const auto timeout = detail::getenv_or("TRN_TIMEOUT_MS");
    if (!timeout.empty()) {
      try {
        c.retry.timeout = std::chrono::milliseconds(std::stol(timeout));
      } catch (const std::exception&) {
        throw ConfigError("TRN_TIMEOUT_MS is not a number: " + timeout);
      }
    }
    return c;
  }
};

// Embedding service client. Vectors are normalized on arrival and cached
// per text, so repeated lookups return identical vectors.
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(RemoteEmbedderConfig cfg)
      : cfg_(std::move(cfg)), ep_(parse_endpoint(cfg_.url)) {}

  EmbeddingVector embed(std::string_view text) const override {
    const std::string key(text);
    {
      std::shared_lock lock(mu_);
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    auto vecs = fetch({key});
    std::unique_lock lock(mu_);
    // A concurrent caller may have inserted first; keep whichever landed.
    return cache_.emplace(key, std::move(vecs.front())).first->second;
  }

  std::size_t dim() const override { return cfg_.dim; }
  std::string id() const override {
    return "remote:" + cfg_.url + "/" + std::to_string(cfg_.dim);
  }

  std::size_t cached() const {
    std::shared_lock lock(mu_);
    return cache_.size();
  }

 private:
  std::vector<EmbeddingVector> fetch(const std::vector<std::string>& texts) const {
    const auto j = detail::post_json(ep_, "", {{"texts", texts}}, cfg_.retry);
    std::vector<EmbeddingVector> out;
    try {
      for (const auto& row : j.at("vectors")) {
        EmbeddingVector v(row.get<std::vector<double>>());
        if (v.dim() != cfg_.dim) {
          throw BackendError("embedder returned dimension " + std::to_string(v.dim()) +
                             ", configured " + std::to_string(cfg_.dim));
        }
        l2_normalize(v);
        out.push_back(std::move(v));
      }
    } catch (const nlohmann::json::exception&) {
      throw BackendError("embedder response lacks a numeric 'vectors' array");
    }
    if (out.size() != texts.size()) {
      throw BackendError("embedder returned " + std::to_string(out.size()) +
                         " vectors for " + std::to_string(texts.size()) + " texts");
    }
    return out;
  }

  RemoteEmbedderConfig cfg_;
  HttpEndpoint ep_;
  mutable std::shared_mutex mu_;
  mutable std::unordered_map<std::string, EmbeddingVector> cache_;
};

}  // namespace trizx

#endif  // TRIZX_REMOTE_HPP_
