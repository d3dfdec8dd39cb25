#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cwu/chunker.hpp"
#include "cwu/tokenizer.hpp"

namespace cwu {

/// Descriptor of an LLM endpoint. context_length is the model's context
/// window L in tokens (of the built-in tokenizer).
struct ModelProfile {
  std::string name;
  std::size_t context_length = 8192;
  std::string endpoint_url;  // remote only
  std::string api_key_env = "CWU_API_KEY";
  std::size_t max_output_tokens = 256;
};

struct PromptTemplate {
  std::string system_text;
  std::string user_template;  // slots: {context}, {question}
};

inline const PromptTemplate& default_prompt_template() {
  static const PromptTemplate tmpl{
      "Answer the question using only the provided context.",
      "Context:\n{context}\n\nQuestion: {question}\nAnswer:"};
  return tmpl;
}

/// A fully rendered request. prompt_tokens (U) is the token count of the
/// complete rendered text, system part included, and is what the context
/// budget check and CWU accounting use.
struct Prompt {
  std::string system_text;
  std::string question;
  std::vector<std::string> context_chunks;
  std::string user_text;
  std::string rendered;
  std::size_t prompt_tokens = 0;
};

namespace detail {

inline std::string replace_slot(std::string text, std::string_view slot,
                                std::string_view value) {
  const auto pos = text.find(slot);
  if (pos != std::string::npos) {
    text.replace(pos, slot.size(), value);
  }
  return text;
}

}  // namespace detail

/// Joins chunks in the given (retrieval-score) order and renders the
/// template. rendered = system text + blank line + user text.
inline Prompt assemble_prompt(std::string question,
                              std::vector<std::string> context_chunks,
                              const PromptTemplate& tmpl = default_prompt_template()) {
  Prompt p;
  p.system_text = tmpl.system_text;
  p.question = std::move(question);
  p.context_chunks = std::move(context_chunks);

  std::string context;
  for (std::size_t i = 0; i < p.context_chunks.size(); ++i) {
    if (i) context += "\n\n---\n\n";
    context += p.context_chunks[i];
  }
  p.user_text = detail::replace_slot(
      detail::replace_slot(tmpl.user_template, "{context}", context), "{question}",
      p.question);
  p.rendered = p.system_text + "\n\n" + p.user_text;
  p.prompt_tokens = count_tokens(p.rendered);
  return p;
}

enum class GenerationStatus { ok, context_overflow, api_error };

/// Exactly one status per call. answer is non-empty only when ok;
/// http_status is set only for api_error outcomes caused by an HTTP reply.
struct GenerationOutcome {
  GenerationStatus status = GenerationStatus::api_error;
  std::string answer;
  int http_status = 0;
};

/// Generation behind a hard context budget: a prompt whose tokens plus the
/// reserved output budget exceed the model's context length short-circuits
/// to context_overflow before any provider work runs, so no remote request
/// can ever be issued over budget.
class GenerationProvider {
 public:
  virtual ~GenerationProvider() = default;

  GenerationOutcome generate(const ModelProfile& profile, const Prompt& prompt) {
    if (prompt.prompt_tokens + profile.max_output_tokens > profile.context_length) {
      return {GenerationStatus::context_overflow, "", 0};
    }
    return generate_unchecked(profile, prompt);
  }

 protected:
  virtual GenerationOutcome generate_unchecked(const ModelProfile& profile,
                                               const Prompt& prompt) = 0;
};

namespace detail {

inline std::unordered_set<std::string> lowercased_word_set(std::string_view text) {
  std::unordered_set<std::string> words;
  for (const Token& tok : tokenize(text)) {
    if (tok.kind != TokenKind::word) continue;
    std::string w(token_text(text, tok));
    for (char& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    words.insert(std::move(w));
  }
  return words;
}

inline double jaccard(const std::unordered_set<std::string>& a,
                      const std::unordered_set<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& w : a) {
    if (b.count(w)) ++inter;
  }
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

}  // namespace detail

/// Deterministic extractive answerer: returns the context sentence whose
/// lowercased word set has the highest Jaccard overlap with the question's.
/// Ties go to the earliest sentence in chunk order, then sentence order.
inline std::string mock_extractive_answer(const Prompt& prompt) {
  const auto question_words = detail::lowercased_word_set(prompt.question);
  double best = -1.0;
  std::string best_sentence;
  for (const auto& chunk : prompt.context_chunks) {
    for (const auto& span : split_sentences(chunk)) {
      const std::string_view sentence =
          std::string_view(chunk).substr(span.begin, span.end - span.begin);
      const double score =
          detail::jaccard(detail::lowercased_word_set(sentence), question_words);
      if (score > best) {
        best = score;
        best_sentence = std::string(sentence);
      }
    }
  }
  if (best < 0.0) return "I don't know.";
  return best_sentence;
}

class MockExtractiveLlm final : public GenerationProvider {
 protected:
  GenerationOutcome generate_unchecked(const ModelProfile&, const Prompt& prompt) override {
    return {GenerationStatus::ok, mock_extractive_answer(prompt), 0};
  }
};

}  // namespace cwu
