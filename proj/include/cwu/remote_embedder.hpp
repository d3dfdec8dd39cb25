#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "cwu/embedding.hpp"
#include "cwu/http.hpp"

namespace cwu {

/// Client for the de-facto embeddings wire format:
///   POST {endpoint_url}/embeddings  {"model": ..., "input": [texts...]}
///   -> {"data": [{"index": i, "embedding": [...]}, ...]}
/// Entries are re-sorted by "index" before use and validated for a
/// consistent dimension; vectors are L2-normalized on the way out.
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  explicit RemoteEmbedder(EmbeddingProviderConfig config) : config_(std::move(config)) {
    if (config_.endpoint_url.empty()) {
      throw std::invalid_argument("RemoteEmbedder: endpoint_url is required");
    }
    if (config_.batch_size == 0) {
      throw std::invalid_argument("RemoteEmbedder: batch_size must be >= 1");
    }
  }

  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += config_.batch_size) {
      const std::size_t stop = std::min(start + config_.batch_size, texts.size());
      auto part = post_batch({texts.begin() + static_cast<std::ptrdiff_t>(start),
                              texts.begin() + static_cast<std::ptrdiff_t>(stop)});
      for (auto& v : part) out.push_back(std::move(v));
    }
    return out;
  }

 private:
  std::vector<EmbeddingVector> post_batch(const std::vector<std::string>& texts) {
    nlohmann::json body;
    body["model"] = config_.model_name;
    body["input"] = texts;
    const std::string payload = body.dump();

    HttpResponse response;
    for (int attempt = 0;; ++attempt) {
      try {
        response = post_json(config_.endpoint_url, "/embeddings",
                             bearer_auth_headers(config_.api_key_env), payload,
                             config_.timeout_sec);
      } catch (const TransportError& e) {
        if (attempt < config_.max_retries) {
          backoff();
          continue;
        }
        throw ProviderError(e.what(), /*retryable=*/true);
      }
      if (response.status >= 500) {
        if (attempt < config_.max_retries) {
          backoff();
          continue;
        }
        throw ProviderError("embedding service error HTTP " +
                                std::to_string(response.status),
                            /*retryable=*/true, response.status);
      }
      if (response.status >= 400) {
        throw ProviderError("embedding request rejected with HTTP " +
                                std::to_string(response.status),
                            /*retryable=*/false, response.status);
      }
      break;
    }
    return parse_response(response.body, texts.size());
  }

  std::vector<EmbeddingVector> parse_response(const std::string& body,
                                              std::size_t expected) {
    nlohmann::json payload;
    try {
      payload = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw ProviderError(std::string("embedding response is not JSON: ") + e.what(),
                          /*retryable=*/false);
    }
    if (!payload.contains("data") || !payload["data"].is_array() ||
        payload["data"].size() != expected) {
      throw ProviderError("embedding response has wrong data count",
                          /*retryable=*/false);
    }
    std::vector<nlohmann::json> entries(payload["data"].begin(), payload["data"].end());
    std::stable_sort(entries.begin(), entries.end(),
                     [](const nlohmann::json& a, const nlohmann::json& b) {
                       return a.value("index", 0) < b.value("index", 0);
                     });
    std::vector<EmbeddingVector> out;
    out.reserve(entries.size());
    std::size_t batch_dim = 0;
    for (const auto& entry : entries) {
      if (!entry.contains("embedding") || !entry["embedding"].is_array()) {
        throw ProviderError("embedding response entry lacks an embedding array",
                            /*retryable=*/false);
      }
      EmbeddingVector v;
      v.values = entry["embedding"].get<std::vector<double>>();
      v.dim = v.values.size();
      if (batch_dim == 0) batch_dim = v.dim;
      if (v.dim != batch_dim || v.dim == 0) {
        throw ProviderError("embedding response dimensions are inconsistent",
                            /*retryable=*/false);
      }
      out.push_back(l2_normalized(std::move(v)));
    }
    if (batch_dim != 0) {
      std::size_t expected = 0;
      if (!dim_.compare_exchange_strong(expected, batch_dim) && expected != batch_dim) {
        throw ProviderError("embedding response dimensions are inconsistent",
                            /*retryable=*/false);
      }
    }
    return out;
  }

  void backoff() const {
    if (config_.retry_delay_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(config_.retry_delay_ms));
    }
  }

  EmbeddingProviderConfig config_;
  std::atomic<std::size_t> dim_{0};
};

}  // namespace cwu
