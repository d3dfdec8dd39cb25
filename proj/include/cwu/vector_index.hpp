#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cwu/embedding.hpp"
#include "cwu/tokenizer.hpp"

namespace cwu {

struct ChunkRef {
  std::string doc_id;
  std::size_t chunk_index = 0;

  friend bool operator==(const ChunkRef& a, const ChunkRef& b) {
    return a.chunk_index == b.chunk_index && a.doc_id == b.doc_id;
  }
  friend bool operator<(const ChunkRef& a, const ChunkRef& b) {
    if (a.doc_id != b.doc_id) return a.doc_id < b.doc_id;
    return a.chunk_index < b.chunk_index;
  }
};

struct IndexEntry {
  ChunkRef chunk_ref;
  EmbeddingVector vector;
  std::size_t token_count = 0;
};

struct RetrievalHit {
  ChunkRef ref;
  double score = 0.0;
};

/// Hits sorted by descending score; ties broken by insertion order,
/// ascending. Holds min(k, index size) entries.
struct RetrievalResult {
  std::vector<RetrievalHit> hits;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f64(std::string& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline void put_str(std::string& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class ByteReader {
 public:
  explicit ByteReader(std::string data) : data_(std::move(data)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string str() {
    const std::uint32_t len = u32();
    need(len);
    std::string s = data_.substr(pos_, len);
    pos_ += len;
    return s;
  }

  std::string raw(std::size_t len) {
    need(len);
    std::string s = data_.substr(pos_, len);
    pos_ += len;
    return s;
  }

  bool exhausted() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t len) {
    if (pos_ + len > data_.size()) {
      throw std::runtime_error("corrupt index file: unexpected end of data");
    }
  }

  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Exact top-k cosine retrieval over chunk embeddings. Immutable after
/// build; safe to share across concurrent queries.
class VectorIndex {
 public:
  static constexpr char kMagic[8] = "CWUIDX1";  // 7 chars + NUL, file stores 7
  static constexpr std::uint32_t kFormatVersion = 1;

  VectorIndex() = default;

  static VectorIndex build(std::vector<IndexEntry> entries,
                           TokenizerSpec tokenizer = default_tokenizer_spec()) {
    VectorIndex index;
    index.tokenizer_ = std::move(tokenizer);
    if (entries.empty()) return index;
    index.dim_ = entries.front().vector.dim;
    std::set<ChunkRef> seen;
    for (const auto& e : entries) {
      if (e.vector.dim != index.dim_) {
        throw std::runtime_error("VectorIndex::build: entry dimension mismatch");
      }
      if (!seen.insert(e.chunk_ref).second) {
        throw std::runtime_error("VectorIndex::build: duplicate chunk_ref " +
                                 e.chunk_ref.doc_id + "#" +
                                 std::to_string(e.chunk_ref.chunk_index));
      }
    }
    index.entries_ = std::move(entries);
    return index;
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t dim() const { return dim_; }
  const IndexEntry& entry(std::size_t i) const { return entries_[i]; }
  const TokenizerSpec& tokenizer_spec() const { return tokenizer_; }

  RetrievalResult query_top_k(const EmbeddingVector& query, std::size_t k) const {
    if (k == 0) throw std::invalid_argument("query_top_k: k must be >= 1");
    if (entries_.empty()) return {};
    if (query.dim != dim_) {
      throw std::invalid_argument("query_top_k: query dimension mismatch");
    }
    std::vector<double> scores(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      scores[i] = cosine_similarity(query, entries_[i].vector);
    }
    std::vector<std::size_t> order(entries_.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t take = std::min(k, entries_.size());
    std::partial_sort(order.begin(), order.begin() + take, order.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (scores[a] != scores[b]) return scores[a] > scores[b];
                        return a < b;
                      });
    RetrievalResult result;
    result.hits.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
      result.hits.push_back({entries_[order[i]].chunk_ref, scores[order[i]]});
    }
    return result;
  }

  void persist(const std::filesystem::path& path) const {
    std::string out;
    out.append(kMagic, 7);
    detail::put_u32(out, kFormatVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(dim_));
    detail::put_u64(out, entries_.size());
    detail::put_str(out, tokenizer_.name);
    detail::put_str(out, tokenizer_.version);
    for (const auto& e : entries_) {
      detail::put_str(out, e.chunk_ref.doc_id);
      detail::put_u64(out, e.chunk_ref.chunk_index);
      detail::put_u64(out, e.token_count);
      out.push_back(e.vector.normalized ? 1 : 0);
      for (const double v : e.vector.values) detail::put_f64(out, v);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write index file: " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("failed writing index file: " + path.string());
  }

  static VectorIndex load(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open index file: " + path.string());
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    detail::ByteReader r(std::move(data));
    if (r.raw(7) != std::string_view(kMagic, 7)) {
      throw std::runtime_error("not an index file: " + path.string());
    }
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion) {
      throw std::runtime_error("unsupported index format version " +
                               std::to_string(version));
    }
    VectorIndex index;
    index.dim_ = r.u32();
    const std::uint64_t count = r.u64();
    index.tokenizer_.name = r.str();
    index.tokenizer_.version = r.str();
    index.entries_.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      IndexEntry e;
      e.chunk_ref.doc_id = r.str();
      e.chunk_ref.chunk_index = r.u64();
      e.token_count = r.u64();
      e.vector.normalized = r.raw(1)[0] != 0;
      e.vector.dim = index.dim_;
      e.vector.values.resize(index.dim_);
      for (std::size_t d = 0; d < index.dim_; ++d) e.vector.values[d] = r.f64();
      index.entries_.push_back(std::move(e));
    }
    if (!r.exhausted()) {
      throw std::runtime_error("corrupt index file: trailing bytes in " + path.string());
    }
    return index;
  }

 private:
  std::vector<IndexEntry> entries_;
  std::size_t dim_ = 0;
  TokenizerSpec tokenizer_ = default_tokenizer_spec();
};

}  // namespace cwu
