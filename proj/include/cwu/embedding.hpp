#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cwu/tokenizer.hpp"

namespace cwu {

/// Fixed-dimension embedding. Vectors coming out of providers are
/// L2-normalized except the all-zero vector, which passes through with
/// normalized=false.
struct EmbeddingVector {
  std::size_t dim = 0;
  std::vector<double> values;
  bool normalized = false;
};

/// Failure talking to an embedding or generation service. retryable()
/// distinguishes transport-level trouble from definitive HTTP 4xx rejections,
/// which carry their status code.
class ProviderError : public std::runtime_error {
 public:
  ProviderError(const std::string& message, bool retryable, int http_status = 0)
      : std::runtime_error(message), retryable_(retryable), http_status_(http_status) {}

  bool retryable() const { return retryable_; }
  int http_status() const { return http_status_; }

 private:
  bool retryable_;
  int http_status_;
};

inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim != b.dim) {
    throw std::invalid_argument("cosine_similarity: dimension mismatch (" +
                                std::to_string(a.dim) + " vs " + std::to_string(b.dim) + ")");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim; ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double s = dot / (std::sqrt(na) * std::sqrt(nb));
  if (s > 1.0) return 1.0;
  if (s < -1.0) return -1.0;
  return s;
}

inline EmbeddingVector l2_normalized(EmbeddingVector v) {
  double norm_sq = 0.0;
  for (const double x : v.values) norm_sq += x * x;
  if (norm_sq == 0.0) {
    v.normalized = false;
    return v;
  }
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (double& x : v.values) x *= inv;
  v.normalized = true;
  return v;
}

struct EmbeddingProviderConfig {
  enum class Kind { remote, hashing };
  Kind kind = Kind::hashing;
  std::string endpoint_url;  // remote only
  std::string model_name;    // remote only
  std::size_t dim = 256;     // hashing only
  std::size_t batch_size = 16;
  std::string api_key_env = "CWU_API_KEY";
  int max_retries = 2;
  int retry_delay_ms = 200;
  int timeout_sec = 60;
};

/// Turns text into vectors. Output order matches input order and all vectors
/// of one provider share a dimension. Implementations must be safe for
/// concurrent calls.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) = 0;
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

/// Deterministic signed-bucket bag-of-tokens embedder, the hermetic stand-in
/// for a learned sentence embedder. Each lowercased token hashes with FNV-1a
/// 64; bucket = h mod dim; sign from the hash's top bit; the accumulated
/// vector is L2-normalized.
class HashingEmbedder final : public EmbeddingProvider {
 public:
  explicit HashingEmbedder(std::size_t dim = 256) : dim_(dim) {
    if (dim < 8) throw std::invalid_argument("HashingEmbedder: dim must be >= 8");
  }

  std::size_t dim() const { return dim_; }

  EmbeddingVector embed(std::string_view text) const {
    EmbeddingVector v;
    v.dim = dim_;
    v.values.assign(dim_, 0.0);
    std::string lowered;
    for (const Token& tok : tokenize(text)) {
      lowered.assign(token_text(text, tok));
      for (char& c : lowered) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
      const std::uint64_t h = fnv1a64(lowered);
      const std::size_t bucket = static_cast<std::size_t>(h % dim_);
      v.values[bucket] += (h >> 63) ? -1.0 : 1.0;
    }
    return l2_normalized(std::move(v));
  }

  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
  }

 private:
  std::size_t dim_;
};

}  // namespace cwu
