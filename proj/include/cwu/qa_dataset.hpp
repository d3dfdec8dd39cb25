#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cwu/chunker.hpp"
#include "cwu/llm.hpp"
#include "cwu/tokenizer.hpp"

namespace cwu {

enum class QaKind { what, how, why, other };

inline std::string_view to_string(QaKind kind) {
  switch (kind) {
    case QaKind::what: return "what";
    case QaKind::how: return "how";
    case QaKind::why: return "why";
    case QaKind::other: return "other";
  }
  return "other";
}

inline QaKind qa_kind_from_string(std::string_view s) {
  if (s == "what") return QaKind::what;
  if (s == "how") return QaKind::how;
  if (s == "why") return QaKind::why;
  if (s == "other") return QaKind::other;
  throw std::invalid_argument("unknown QA kind: " + std::string(s));
}

/// Classification by leading interrogative: trimmed question starting with
/// what/how/why (case-insensitive) takes that kind, anything else is other.
inline QaKind classify_kind(std::string_view question) {
  std::size_t b = 0;
  while (b < question.size() &&
         std::isspace(static_cast<unsigned char>(question[b])) != 0) {
    ++b;
  }
  std::string head;
  for (std::size_t i = b; i < question.size() && head.size() < 4; ++i) {
    head.push_back(
        static_cast<char>(std::tolower(static_cast<unsigned char>(question[i]))));
  }
  if (head.rfind("what", 0) == 0) return QaKind::what;
  if (head.rfind("how", 0) == 0) return QaKind::how;
  if (head.rfind("why", 0) == 0) return QaKind::why;
  return QaKind::other;
}

struct QAPair {
  std::string id;
  std::string question;
  std::string answer;  // reference answer, treated as ground truth
  std::vector<std::string> source_docs;
  QaKind kind = QaKind::other;
};

inline constexpr std::string_view kQaGenPromptName = "qa-gen";
inline constexpr std::string_view kQaGenPromptVersion = "1";

inline const PromptTemplate& qa_gen_prompt_template() {
  static const PromptTemplate tmpl{
      "You write question-answer datasets for evaluating document question "
      "answering.",
      "Write {question} question-answer pairs about the document below. Mix "
      "descriptive What, How, and Why questions; every answer must be grounded "
      "solely in the document text.\n"
      "Output exactly one JSON object per line and nothing else, in the form\n"
      "{\"question\": \"...\", \"answer\": \"...\"}\n\n"
      "Document:\n{context}"};
  return tmpl;
}

struct QaGenReport {
  std::size_t documents = 0;
  std::size_t pairs = 0;
  std::size_t truncated_docs = 0;
  std::size_t dropped_lines = 0;
  std::vector<std::string> failed_docs;  // provider error or zero parseable pairs
};

/// Asks the provider for n_per_doc pairs per document, parsing the demanded
/// JSON-lines block. Documents over the prompt budget are truncated to their
/// leading tokens and counted; unparseable output lines are dropped and
/// counted; documents yielding nothing land in failed_docs but never abort.
inline std::vector<QAPair> generate_qa(GenerationProvider& provider,
                                       const ModelProfile& profile,
                                       const std::vector<Document>& corpus,
                                       std::size_t n_per_doc,
                                       QaGenReport* report = nullptr) {
  QaGenReport local;
  QaGenReport& rep = report ? *report : local;
  rep = QaGenReport{};
  std::vector<QAPair> pairs;
  if (n_per_doc == 0) return pairs;

  const auto& tmpl = qa_gen_prompt_template();
  const std::string n_str = std::to_string(n_per_doc);
  const std::size_t overhead =
      assemble_prompt(n_str, {std::string()}, tmpl).prompt_tokens;

  for (const auto& doc : corpus) {
    ++rep.documents;
    std::string text = doc.text;
    const std::size_t budget =
        profile.context_length > profile.max_output_tokens + overhead
            ? profile.context_length - profile.max_output_tokens - overhead
            : 0;
    if (budget == 0) {
      rep.failed_docs.push_back(doc.id);
      continue;
    }
    if (count_tokens(text) > budget) {
      text = text.substr(0, token_prefix_end(text, budget));
      ++rep.truncated_docs;
    }
    const Prompt prompt = assemble_prompt(n_str, {std::move(text)}, tmpl);
    const GenerationOutcome outcome = provider.generate(profile, prompt);
    if (outcome.status != GenerationStatus::ok) {
      rep.failed_docs.push_back(doc.id);
      continue;
    }

    std::size_t ordinal = 0;
    std::istringstream lines(outcome.answer);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json parsed;
      try {
        parsed = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception&) {
        ++rep.dropped_lines;
        continue;
      }
      if (!parsed.is_object() || !parsed.contains("question") ||
          !parsed.contains("answer") || !parsed["question"].is_string() ||
          !parsed["answer"].is_string() ||
          parsed["question"].get_ref<const std::string&>().empty() ||
          parsed["answer"].get_ref<const std::string&>().empty()) {
        ++rep.dropped_lines;
        continue;
      }
      QAPair pair;
      pair.id = doc.id + "#q" + std::to_string(ordinal++);
      pair.question = parsed["question"].get<std::string>();
      pair.answer = parsed["answer"].get<std::string>();
      pair.source_docs = {doc.id};
      pair.kind = classify_kind(pair.question);
      pairs.push_back(std::move(pair));
    }
    if (ordinal == 0) rep.failed_docs.push_back(doc.id);
  }
  rep.pairs = pairs.size();
  return pairs;
}

inline void save_qa(const std::vector<QAPair>& pairs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write QA file: " + path.string());
  for (const auto& p : pairs) {
    nlohmann::json j;
    j["id"] = p.id;
    j["question"] = p.question;
    j["answer"] = p.answer;
    j["source_docs"] = p.source_docs;
    j["kind"] = to_string(p.kind);
    out << j.dump() << "\n";
  }
}

inline std::vector<QAPair> load_qa(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open QA file: " + path.string());
  std::vector<QAPair> pairs;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + " line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(where + ": invalid JSON: " + e.what());
    }
    QAPair p;
    try {
      p.id = j.at("id").get<std::string>();
      p.question = j.at("question").get<std::string>();
      p.answer = j.at("answer").get<std::string>();
      if (j.contains("source_docs")) {
        p.source_docs = j["source_docs"].get<std::vector<std::string>>();
      }
      p.kind = j.contains("kind") ? qa_kind_from_string(j["kind"].get<std::string>())
                                  : classify_kind(p.question);
    } catch (const std::exception& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
    if (p.id.empty() || p.question.empty() || p.answer.empty()) {
      throw std::runtime_error(where + ": id, question and answer must be non-empty");
    }
    if (!ids.insert(p.id).second) {
      throw std::runtime_error(where + ": duplicate id '" + p.id + "'");
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace cwu
