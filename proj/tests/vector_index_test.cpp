#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <vector>

#include "cwu/vector_index.hpp"

namespace {

cwu::EmbeddingVector random_vec(std::mt19937& rng, std::size_t dim) {
  std::normal_distribution<double> nd(0.0, 1.0);
  cwu::EmbeddingVector v;
  v.dim = dim;
  v.values.resize(dim);
  for (auto& x : v.values) x = nd(rng);
  return cwu::l2_normalized(std::move(v));
}

std::vector<cwu::IndexEntry> random_entries(std::mt19937& rng, std::size_t n,
                                            std::size_t dim) {
  std::vector<cwu::IndexEntry> entries;
  entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    cwu::IndexEntry e;
    e.chunk_ref = {"doc" + std::to_string(i / 10) + ".txt", i % 10};
    e.vector = random_vec(rng, dim);
    e.token_count = 100 + i;
    entries.push_back(std::move(e));
  }
  return entries;
}

// Linear-scan oracle: score every entry, sort by (-score, insertion order).
std::vector<std::pair<std::size_t, double>> brute_force_top_k(
    const std::vector<cwu::IndexEntry>& entries, const cwu::EmbeddingVector& q,
    std::size_t k) {
  std::vector<std::pair<std::size_t, double>> scored;
  scored.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    scored.emplace_back(i, cwu::cosine_similarity(q, entries[i].vector));
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  scored.resize(std::min(k, scored.size()));
  return scored;
}

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& name)
      : path(std::filesystem::temp_directory_path() / name) {}
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path, ec);
  }
};

}  // namespace

TEST_CASE("empty index answers every query with nothing", "[vector_index]") {
  const auto index = cwu::VectorIndex::build({});
  CHECK(index.size() == 0);
  std::mt19937 rng(1);
  CHECK(index.query_top_k(random_vec(rng, 16), 5).hits.empty());
}

TEST_CASE("small index basics", "[vector_index]") {
  std::mt19937 rng(2);
  auto entries = random_entries(rng, 3, 16);
  const auto index = cwu::VectorIndex::build(entries);
  CHECK(index.size() == 3);

  const auto q = random_vec(rng, 16);
  const auto res = index.query_top_k(q, 10);
  REQUIRE(res.hits.size() == 3);  // k larger than index size -> everything
  CHECK(res.hits[0].score >= res.hits[1].score);
  CHECK(res.hits[1].score >= res.hits[2].score);

  const auto single = cwu::VectorIndex::build({entries[0]});
  const auto one = single.query_top_k(q, 1);
  REQUIRE(one.hits.size() == 1);
  CHECK(one.hits[0].score ==
        Catch::Approx(cwu::cosine_similarity(q, entries[0].vector)));
}

TEST_CASE("build rejects duplicates and dim mismatches", "[vector_index]") {
  std::mt19937 rng(3);
  auto entries = random_entries(rng, 4, 16);
  auto dup = entries;
  dup[3].chunk_ref = dup[0].chunk_ref;
  CHECK_THROWS_WITH(cwu::VectorIndex::build(dup),
                    Catch::Matchers::ContainsSubstring("duplicate"));

  auto mixed = entries;
  mixed[2].vector = random_vec(rng, 8);
  CHECK_THROWS_WITH(cwu::VectorIndex::build(mixed),
                    Catch::Matchers::ContainsSubstring("dimension"));
}

TEST_CASE("query validates arguments", "[vector_index]") {
  std::mt19937 rng(4);
  const auto index = cwu::VectorIndex::build(random_entries(rng, 5, 16));
  CHECK_THROWS_AS(index.query_top_k(random_vec(rng, 8), 3), std::invalid_argument);
  CHECK_THROWS_AS(index.query_top_k(random_vec(rng, 16), 0), std::invalid_argument);
}

TEST_CASE("500 random entries agree with the linear-scan oracle", "[vector_index]") {
  std::mt19937 rng(20240500);
  const auto entries = random_entries(rng, 500, 32);
  const auto index = cwu::VectorIndex::build(entries);
  for (int trial = 0; trial < 25; ++trial) {
    const auto q = random_vec(rng, 32);
    for (std::size_t k = 1; k <= 12; ++k) {
      const auto got = index.query_top_k(q, k);
      const auto want = brute_force_top_k(entries, q, k);
      REQUIRE(got.hits.size() == want.size());
      for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(got.hits[i].ref == entries[want[i].first].chunk_ref);
        CHECK(got.hits[i].score == want[i].second);
      }
    }
  }
}

TEST_CASE("tie order follows insertion order", "[vector_index]") {
  // Every entry identical: scores all tie, hits must come back in
  // insertion order.
  cwu::EmbeddingVector v;
  v.dim = 8;
  v.values = {1, 0, 0, 0, 0, 0, 0, 0};
  v = cwu::l2_normalized(std::move(v));
  std::vector<cwu::IndexEntry> entries;
  for (std::size_t i = 0; i < 6; ++i) {
    entries.push_back({{"d.txt", i}, v, 10});
  }
  const auto index = cwu::VectorIndex::build(entries);
  const auto res = index.query_top_k(v, 4);
  REQUIRE(res.hits.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(res.hits[i].ref.chunk_index == i);
  }
}

TEST_CASE("persist and load round-trip is observationally equal", "[vector_index]") {
  std::mt19937 rng(6);
  const auto entries = random_entries(rng, 40, 24);
  const auto index = cwu::VectorIndex::build(entries);
  TempFile tmp("cwu_index_roundtrip.idx");
  index.persist(tmp.path);
  const auto loaded = cwu::VectorIndex::load(tmp.path);

  CHECK(loaded.size() == index.size());
  CHECK(loaded.dim() == index.dim());
  CHECK(loaded.tokenizer_spec().name == index.tokenizer_spec().name);
  for (int trial = 0; trial < 10; ++trial) {
    const auto q = random_vec(rng, 24);
    for (std::size_t k : {1u, 3u, 12u}) {
      const auto a = index.query_top_k(q, k);
      const auto b = loaded.query_top_k(q, k);
      REQUIRE(a.hits.size() == b.hits.size());
      for (std::size_t i = 0; i < a.hits.size(); ++i) {
        CHECK(a.hits[i].ref == b.hits[i].ref);
        CHECK(a.hits[i].score == b.hits[i].score);  // bit-equal
      }
    }
  }
}

TEST_CASE("load rejects foreign and corrupt files", "[vector_index]") {
  TempFile bad("cwu_index_bad.idx");
  {
    std::ofstream f(bad.path, std::ios::binary);
    f << "definitely not an index";
  }
  CHECK_THROWS_WITH(cwu::VectorIndex::load(bad.path),
                    Catch::Matchers::ContainsSubstring("not an index file"));

  // Truncate a valid file in the middle of an entry.
  std::mt19937 rng(7);
  const auto index = cwu::VectorIndex::build(random_entries(rng, 10, 16));
  TempFile trunc("cwu_index_trunc.idx");
  index.persist(trunc.path);
  const auto full_size = std::filesystem::file_size(trunc.path);
  std::filesystem::resize_file(trunc.path, full_size - 9);
  CHECK_THROWS_WITH(cwu::VectorIndex::load(trunc.path),
                    Catch::Matchers::ContainsSubstring("corrupt"));
}
