#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cwu/embedding.hpp"
#include "cwu/llm.hpp"
#include "cwu/qa_dataset.hpp"
#include "cwu/vector_index.hpp"

namespace cwu {

enum class EvalStatus { ok, overflow, api_error };

inline std::string_view to_string(EvalStatus status) {
  switch (status) {
    case EvalStatus::ok: return "ok";
    case EvalStatus::overflow: return "overflow";
    case EvalStatus::api_error: return "api_error";
  }
  return "api_error";
}

inline EvalStatus eval_status_from_string(std::string_view s) {
  if (s == "ok") return EvalStatus::ok;
  if (s == "overflow") return EvalStatus::overflow;
  if (s == "api_error") return EvalStatus::api_error;
  throw std::invalid_argument("unknown eval status: " + std::string(s));
}

/// Similarity recorded when generation failed (context overflow or API
/// error). The literal 0.5 is preserved through aggregation so failed cells
/// stay visible on the heatmap scale.
inline constexpr double kSentinelScore = 0.5;

/// One (question x grid cell) outcome.
struct EvalRecord {
  std::string qa_id;
  std::size_t chunk_size = 0;  // C
  std::size_t top_k = 0;       // k
  double similarity = 0.0;     // S in [0,1]; exactly 0.5 when status != ok
  std::size_t utilized_tokens = 0;  // U of the assembled prompt
  double cwu_value = 0.0;           // U/L, recorded even for failed trials
  EvalStatus status = EvalStatus::api_error;
  std::vector<ChunkRef> retrieved;
};

/// CWU = U/L as an exact real quotient, deliberately not clamped: values
/// above 1 indicate prompts past the context budget.
inline double cwu(std::size_t utilized_tokens, std::size_t context_length) {
  if (context_length == 0) {
    throw std::invalid_argument("cwu: context length must be >= 1");
  }
  return static_cast<double>(utilized_tokens) / static_cast<double>(context_length);
}

/// Embedding-cosine similarity of candidate vs reference, clamped to [0,1].
/// Empty candidates score 0 without touching the scorer.
inline double score_answer(const std::string& candidate, const std::string& reference,
                           EmbeddingProvider& scorer) {
  if (reference.empty()) {
    throw std::invalid_argument("score_answer: reference must be non-empty");
  }
  if (candidate.empty()) return 0.0;
  const auto vecs = scorer.embed_batch({candidate, reference});
  const double s = cosine_similarity(vecs[0], vecs[1]);
  return s < 0.0 ? 0.0 : s;
}

/// Folds one trial into an EvalRecord. ok outcomes are scored against the
/// reference answer; overflow and api_error outcomes take the 0.5 sentinel.
/// A scorer failure downgrades the record to api_error rather than throwing.
inline EvalRecord evaluate_cell_question(const QAPair& qa, std::size_t chunk_size,
                                         std::size_t top_k,
                                         const RetrievalResult& retrieval,
                                         const Prompt& prompt,
                                         const GenerationOutcome& outcome,
                                         EmbeddingProvider& scorer,
                                         const ModelProfile& profile) {
  EvalRecord record;
  record.qa_id = qa.id;
  record.chunk_size = chunk_size;
  record.top_k = top_k;
  record.utilized_tokens = prompt.prompt_tokens;
  record.cwu_value = cwu(prompt.prompt_tokens, profile.context_length);
  record.retrieved.reserve(retrieval.hits.size());
  for (const auto& hit : retrieval.hits) record.retrieved.push_back(hit.ref);

  switch (outcome.status) {
    case GenerationStatus::ok:
      try {
        record.similarity = score_answer(outcome.answer, qa.answer, scorer);
        record.status = EvalStatus::ok;
      } catch (const ProviderError&) {
        record.similarity = kSentinelScore;
        record.status = EvalStatus::api_error;
      }
      break;
    case GenerationStatus::context_overflow:
      record.similarity = kSentinelScore;
      record.status = EvalStatus::overflow;
      break;
    case GenerationStatus::api_error:
      record.similarity = kSentinelScore;
      record.status = EvalStatus::api_error;
      break;
  }
  return record;
}

inline nlohmann::json record_to_json(const EvalRecord& r) {
  nlohmann::json retrieved = nlohmann::json::array();
  for (const auto& ref : r.retrieved) {
    retrieved.push_back({{"doc", ref.doc_id}, {"chunk", ref.chunk_index}});
  }
  return nlohmann::json{{"qa_id", r.qa_id},
                        {"chunk_size", r.chunk_size},
                        {"top_k", r.top_k},
                        {"similarity", r.similarity},
                        {"utilized_tokens", r.utilized_tokens},
                        {"cwu", r.cwu_value},
                        {"status", std::string(to_string(r.status))},
                        {"retrieved", retrieved}};
}

inline EvalRecord record_from_json(const nlohmann::json& j) {
  EvalRecord r;
  r.qa_id = j.at("qa_id").get<std::string>();
  r.chunk_size = j.at("chunk_size").get<std::size_t>();
  r.top_k = j.at("top_k").get<std::size_t>();
  r.similarity = j.at("similarity").get<double>();
  r.utilized_tokens = j.at("utilized_tokens").get<std::size_t>();
  r.cwu_value = j.at("cwu").get<double>();
  r.status = eval_status_from_string(j.at("status").get<std::string>());
  for (const auto& ref : j.at("retrieved")) {
    r.retrieved.push_back(
        {ref.at("doc").get<std::string>(), ref.at("chunk").get<std::size_t>()});
  }
  return r;
}

inline void save_records(const std::vector<EvalRecord>& records,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write records file: " + path.string());
  for (const auto& r : records) {
    out << record_to_json(r).dump() << "\n";
  }
}

inline std::vector<EvalRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open records file: " + path.string());
  std::vector<EvalRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + " line " + std::to_string(line_no) +
                               ": " + e.what());
    }
  }
  return records;
}

}  // namespace cwu
