#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cwu/chunker.hpp"
#include "cwu/embedding.hpp"
#include "cwu/evaluator.hpp"
#include "cwu/llm.hpp"
#include "cwu/qa_dataset.hpp"
#include "cwu/vector_index.hpp"

namespace cwu {

struct SweepConfig {
  std::vector<std::size_t> chunk_sizes = {128, 256, 512, 1024, 2048};
  std::vector<std::size_t> top_ks = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  ModelProfile model;
  double epsilon_tie = 0.001;
  std::size_t parallelism = 1;
  std::uint64_t seed = 0;
  std::filesystem::path workdir;
  bool archive_prompts = false;
  PromptTemplate prompt_template = default_prompt_template();
  // Provider descriptions recorded in the result snapshot.
  std::string embedder_desc = "hashing";
  std::string scorer_desc = "hashing";
  std::string llm_desc = "mock";
  // Timestamp source; overridable so identical runs serialize identically.
  std::function<std::string()> clock;
};

/// Aggregate of one (chunk_size, top_k) grid point. mean_similarity averages
/// ALL records, sentinels included; mean_cwu_actual averages ok records only.
struct SweepCell {
  std::size_t chunk_size = 0;
  std::size_t top_k = 0;
  double mean_similarity = 0.0;
  double mean_cwu_actual = 0.0;  // 0 when the cell has no ok records
  double nominal_cwu = 0.0;      // C*k/L
  std::size_t n_ok = 0;
  std::size_t n_overflow = 0;
  std::size_t n_api_error = 0;
};

struct OptimumEntry {
  std::size_t chunk_size = 0;
  std::size_t top_k = 0;
  double mean_similarity = 0.0;
  double mean_cwu_actual = 0.0;
};

/// The argmax cell plus every cell within epsilon_tie of the maximum,
/// sorted by (-mean_similarity, top_k, chunk_size).
struct OptimumReport {
  OptimumEntry best;
  std::vector<OptimumEntry> co_optimal;
  std::string rationale;
};

struct TopkSummary {
  std::size_t top_k = 0;
  double best_mean_similarity = 0.0;
  std::size_t best_chunk_size = 0;
  double mean_cwu_actual = 0.0;
};

struct SweepMeta {
  nlohmann::json config;
  TokenizerSpec tokenizer = default_tokenizer_spec();
  std::string started;
  std::string finished;
};

struct SweepResult {
  SweepMeta meta;
  std::vector<SweepCell> cells;      // grid order: C ascending, then k
  std::vector<EvalRecord> records;   // sorted by (C, k, qa_id)
  std::vector<std::string> rendered_prompts;  // aligned with records when archived
  OptimumReport optimum;
};

/// The whole sweep failed (every trial came back api_error).
class SweepAborted : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline OptimumReport select_optimum(const std::vector<SweepCell>& cells,
                                    double epsilon_tie) {
  if (cells.empty()) throw std::invalid_argument("select_optimum: no cells");
  double max_s = -std::numeric_limits<double>::infinity();
  for (const auto& c : cells) max_s = std::max(max_s, c.mean_similarity);

  OptimumReport report;
  for (const auto& c : cells) {
    if (c.mean_similarity >= max_s - epsilon_tie) {
      report.co_optimal.push_back(
          {c.chunk_size, c.top_k, c.mean_similarity, c.mean_cwu_actual});
    }
  }
  std::sort(report.co_optimal.begin(), report.co_optimal.end(),
            [](const OptimumEntry& a, const OptimumEntry& b) {
              if (a.mean_similarity != b.mean_similarity) {
                return a.mean_similarity > b.mean_similarity;
              }
              if (a.top_k != b.top_k) return a.top_k < b.top_k;
              return a.chunk_size < b.chunk_size;
            });
  report.best = *std::min_element(report.co_optimal.begin(), report.co_optimal.end(),
                                  [](const OptimumEntry& a, const OptimumEntry& b) {
                                    if (a.top_k != b.top_k) return a.top_k < b.top_k;
                                    return a.chunk_size < b.chunk_size;
                                  });
  report.rationale =
      "cells within epsilon_tie of the best mean similarity are co-optimal; "
      "the smallest top-k (then smallest chunk size) wins because retrieving "
      "fewer chunks lowers retrieval and response latency";
  return report;
}

/// Per-k column maxima: for each top_k the best mean similarity across chunk
/// sizes, with the achieving chunk size and its actual CWU.
inline std::vector<TopkSummary> aggregate_by_topk(const std::vector<SweepCell>& cells) {
  if (cells.empty()) throw std::invalid_argument("aggregate_by_topk: no cells");
  std::set<std::size_t> ks;
  for (const auto& c : cells) ks.insert(c.top_k);
  std::vector<TopkSummary> summary;
  summary.reserve(ks.size());
  for (const std::size_t k : ks) {
    const SweepCell* best = nullptr;
    for (const auto& c : cells) {
      if (c.top_k != k) continue;
      if (!best || c.mean_similarity > best->mean_similarity ||
          (c.mean_similarity == best->mean_similarity &&
           c.chunk_size < best->chunk_size)) {
        best = &c;
      }
    }
    summary.push_back({k, best->mean_similarity, best->chunk_size, best->mean_cwu_actual});
  }
  return summary;
}

namespace detail {

inline std::string now_utc_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

template <typename Fn>
inline void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::min(std::max<std::size_t>(workers, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline void validate_grid(const std::vector<std::size_t>& values, const char* name) {
  if (values.empty()) {
    throw std::invalid_argument(std::string(name) + " must be non-empty");
  }
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] <= values[i - 1]) {
      throw std::invalid_argument(std::string(name) + " must be strictly increasing");
    }
  }
}

}  // namespace detail

inline nlohmann::json sweep_config_snapshot(const SweepConfig& config) {
  // Execution-only knobs (parallelism, workdir, archive flag) stay out so
  // identical experiments serialize identically regardless of how they ran.
  return nlohmann::json{
      {"chunk_sizes", config.chunk_sizes},
      {"top_ks", config.top_ks},
      {"model",
       {{"name", config.model.name},
        {"context_length", config.model.context_length},
        {"max_output_tokens", config.model.max_output_tokens}}},
      {"embedder", config.embedder_desc},
      {"scorer", config.scorer_desc},
      {"llm", config.llm_desc},
      {"epsilon_tie", config.epsilon_tie},
      {"seed", config.seed}};
}

inline SweepResult run_sweep(const SweepConfig& config,
                             const std::vector<Document>& corpus,
                             const std::vector<QAPair>& qa_pairs,
                             EmbeddingProvider& embedder, EmbeddingProvider& scorer,
                             GenerationProvider& llm) {
  detail::validate_grid(config.chunk_sizes, "chunk_sizes");
  detail::validate_grid(config.top_ks, "top_ks");
  if (corpus.empty()) throw std::invalid_argument("run_sweep: corpus is empty");
  if (qa_pairs.empty()) throw std::invalid_argument("run_sweep: no QA pairs");
  if (config.model.context_length == 0) {
    throw std::invalid_argument("run_sweep: model context_length must be >= 1");
  }
  {
    std::set<std::string> ids;
    for (const auto& qa : qa_pairs) {
      if (!ids.insert(qa.id).second) {
        throw std::invalid_argument("run_sweep: duplicate qa id '" + qa.id + "'");
      }
    }
  }

  SweepResult result;
  const auto stamp = config.clock ? config.clock : detail::now_utc_iso8601;
  result.meta.config = sweep_config_snapshot(config);
  result.meta.tokenizer = default_tokenizer_spec();
  result.meta.started = stamp();

  const std::size_t n_sizes = config.chunk_sizes.size();
  const std::size_t n_ks = config.top_ks.size();
  const std::size_t n_qa = qa_pairs.size();
  const std::size_t k_max = config.top_ks.back();

  // Per chunk size: chunk every document, embed, build one immutable index.
  struct CellPrep {
    VectorIndex index;
    std::vector<std::string> chunk_texts;          // aligned with index entries
    std::map<ChunkRef, std::size_t> text_by_ref;   // hit ref -> chunk_texts slot
    bool failed = false;
  };
  std::vector<CellPrep> preps(n_sizes);
  if (!config.workdir.empty()) {
    std::filesystem::create_directories(config.workdir / "index");
  }
  detail::parallel_for(n_sizes, config.parallelism, [&](std::size_t ci) {
    CellPrep& prep = preps[ci];
    try {
      std::vector<Chunk> chunks;
      for (const auto& doc : corpus) {
        auto doc_chunks = pack_chunks(doc, config.chunk_sizes[ci]);
        for (auto& c : doc_chunks) chunks.push_back(std::move(c));
      }
      std::vector<std::string> texts;
      texts.reserve(chunks.size());
      for (const auto& c : chunks) texts.push_back(c.text);
      const auto vectors = embedder.embed_batch(texts);
      std::vector<IndexEntry> entries;
      entries.reserve(chunks.size());
      for (std::size_t i = 0; i < chunks.size(); ++i) {
        entries.push_back({{chunks[i].doc_id, chunks[i].chunk_index}, vectors[i],
                           chunks[i].token_count});
      }
      prep.index = VectorIndex::build(std::move(entries));
      prep.chunk_texts = std::move(texts);
      for (std::size_t i = 0; i < chunks.size(); ++i) {
        prep.text_by_ref.emplace(ChunkRef{chunks[i].doc_id, chunks[i].chunk_index}, i);
      }
      if (!config.workdir.empty()) {
        prep.index.persist(config.workdir / "index" /
                           (std::to_string(config.chunk_sizes[ci]) + ".idx"));
      }
    } catch (const ProviderError&) {
      prep.failed = true;
    }
  });

  // Question embeddings are independent of chunk size; embed them once.
  std::vector<EmbeddingVector> question_vecs;
  bool questions_failed = false;
  try {
    std::vector<std::string> questions;
    questions.reserve(n_qa);
    for (const auto& qa : qa_pairs) questions.push_back(qa.question);
    question_vecs = embedder.embed_batch(questions);
  } catch (const ProviderError&) {
    questions_failed = true;
  }

  const std::size_t n_records = n_sizes * n_ks * n_qa;
  result.records.resize(n_records);
  if (config.archive_prompts) result.rendered_prompts.resize(n_records);

  const auto record_slot = [&](std::size_t ci, std::size_t ki, std::size_t qi) {
    return (ci * n_ks + ki) * n_qa + qi;
  };

  // One task per (chunk size, question): retrieve once at the largest k and
  // reuse prefixes, which is exact because top-(k+1) extends top-k under the
  // deterministic tie order.
  detail::parallel_for(n_sizes * n_qa, config.parallelism, [&](std::size_t task) {
    const std::size_t ci = task / n_qa;
    const std::size_t qi = task % n_qa;
    const QAPair& qa = qa_pairs[qi];
    const std::size_t chunk_size = config.chunk_sizes[ci];

    if (preps[ci].failed || questions_failed) {
      for (std::size_t ki = 0; ki < n_ks; ++ki) {
        EvalRecord r;
        r.qa_id = qa.id;
        r.chunk_size = chunk_size;
        r.top_k = config.top_ks[ki];
        r.similarity = kSentinelScore;
        r.status = EvalStatus::api_error;
        result.records[record_slot(ci, ki, qi)] = std::move(r);
      }
      return;
    }

    const VectorIndex& index = preps[ci].index;
    RetrievalResult full;
    if (index.size() > 0) {
      full = index.query_top_k(question_vecs[qi], std::min(k_max, index.size()));
    }
    for (std::size_t ki = 0; ki < n_ks; ++ki) {
      const std::size_t k = config.top_ks[ki];
      RetrievalResult retrieval;
      retrieval.hits.assign(full.hits.begin(),
                            full.hits.begin() + static_cast<std::ptrdiff_t>(std::min(
                                                    k, full.hits.size())));
      std::vector<std::string> context;
      context.reserve(retrieval.hits.size());
      for (const auto& hit : retrieval.hits) {
        context.push_back(preps[ci].chunk_texts[preps[ci].text_by_ref.at(hit.ref)]);
      }
      Prompt prompt = assemble_prompt(qa.question, std::move(context),
                                      config.prompt_template);
      const GenerationOutcome outcome = llm.generate(config.model, prompt);
      EvalRecord record = evaluate_cell_question(qa, chunk_size, k, retrieval, prompt,
                                                 outcome, scorer, config.model);
      const std::size_t slot = record_slot(ci, ki, qi);
      if (config.archive_prompts) result.rendered_prompts[slot] = prompt.rendered;
      result.records[slot] = std::move(record);
    }
  });

  // Deterministic order for aggregation and output.
  {
    std::vector<std::size_t> order(n_records);
    for (std::size_t i = 0; i < n_records; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const EvalRecord& ra = result.records[a];
      const EvalRecord& rb = result.records[b];
      if (ra.chunk_size != rb.chunk_size) return ra.chunk_size < rb.chunk_size;
      if (ra.top_k != rb.top_k) return ra.top_k < rb.top_k;
      return ra.qa_id < rb.qa_id;
    });
    std::vector<EvalRecord> sorted;
    sorted.reserve(n_records);
    std::vector<std::string> sorted_prompts;
    if (config.archive_prompts) sorted_prompts.reserve(n_records);
    for (const std::size_t i : order) {
      sorted.push_back(std::move(result.records[i]));
      if (config.archive_prompts) {
        sorted_prompts.push_back(std::move(result.rendered_prompts[i]));
      }
    }
    result.records = std::move(sorted);
    result.rendered_prompts = std::move(sorted_prompts);
  }

  bool any_not_api_error = false;
  for (const auto& r : result.records) {
    if (r.status != EvalStatus::api_error) {
      any_not_api_error = true;
      break;
    }
  }
  if (!any_not_api_error) {
    throw SweepAborted(
        "sweep aborted: every trial ended in api_error; check provider "
        "configuration and connectivity");
  }

  // Aggregate cells in grid order from the sorted records.
  result.cells.reserve(n_sizes * n_ks);
  std::size_t cursor = 0;
  for (std::size_t ci = 0; ci < n_sizes; ++ci) {
    for (std::size_t ki = 0; ki < n_ks; ++ki) {
      SweepCell cell;
      cell.chunk_size = config.chunk_sizes[ci];
      cell.top_k = config.top_ks[ki];
      cell.nominal_cwu = static_cast<double>(cell.chunk_size * cell.top_k) /
                         static_cast<double>(config.model.context_length);
      double sum_s = 0.0;
      double sum_cwu_ok = 0.0;
      for (std::size_t qi = 0; qi < n_qa; ++qi, ++cursor) {
        const EvalRecord& r = result.records[cursor];
        sum_s += r.similarity;
        switch (r.status) {
          case EvalStatus::ok:
            ++cell.n_ok;
            sum_cwu_ok += r.cwu_value;
            break;
          case EvalStatus::overflow:
            ++cell.n_overflow;
            break;
          case EvalStatus::api_error:
            ++cell.n_api_error;
            break;
        }
      }
      cell.mean_similarity = sum_s / static_cast<double>(n_qa);
      cell.mean_cwu_actual =
          cell.n_ok > 0 ? sum_cwu_ok / static_cast<double>(cell.n_ok) : 0.0;
      result.cells.push_back(cell);
    }
  }

  result.optimum = select_optimum(result.cells, config.epsilon_tie);
  result.meta.finished = stamp();
  return result;
}

}  // namespace cwu
