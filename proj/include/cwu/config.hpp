#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cwu {

/// Bad or contradictory provider/parameter configuration (CLI exit code 3).
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A required input file or directory is absent (CLI exit code 2).
class MissingInputError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Everything the CLI needs to drive a run. Defaults mirror the library
/// defaults; a config file and then command-line flags override them.
struct RunConfig {
  std::filesystem::path corpus_dir;
  std::filesystem::path qa_path;  // empty -> {workdir}/qa.jsonl
  std::filesystem::path workdir = "cwu-work";
  std::vector<std::size_t> chunk_sizes = {128, 256, 512, 1024, 2048};
  std::vector<std::size_t> top_ks = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  std::size_t context_length = 8192;
  std::size_t max_output_tokens = 256;
  std::size_t parallelism = 1;
  std::string provider = "mock";     // mock | remote
  std::string embedder = "hashing";  // hashing | remote
  std::string scorer = "same";       // same | hashing | remote
  double epsilon_tie = 0.001;
  std::uint64_t seed = 0;
  bool archive_prompts = false;
  bool exclude_sentinels = false;
  std::size_t n_per_doc = 5;
  std::string model_name;
  std::string llm_endpoint;
  std::string api_key_env = "CWU_API_KEY";
  std::string embed_endpoint;
  std::string embed_model;
  std::size_t embed_dim = 256;
  std::size_t batch_size = 16;
  std::string scorer_endpoint;
  std::string scorer_model;
  int retries = 2;
  int retry_delay_ms = 200;

  std::filesystem::path effective_qa_path() const {
    return qa_path.empty() ? workdir / "qa.jsonl" : qa_path;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::size_t parse_count(const std::string& value, const std::string& where) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected a non-negative integer, got '" + value + "'");
  }
}

inline bool parse_bool(const std::string& value, const std::string& where) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError(where + ": expected a boolean, got '" + value + "'");
}

inline double parse_real(const std::string& value, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected a number, got '" + value + "'");
  }
}

}  // namespace detail

/// Parses "a,b,c" or the range form "a..b" into a list of counts.
inline std::vector<std::size_t> parse_count_list(const std::string& value,
                                                 const std::string& where = "list") {
  const auto range = value.find("..");
  if (range != std::string::npos) {
    const std::size_t lo = detail::parse_count(detail::trim(value.substr(0, range)), where);
    const std::size_t hi =
        detail::parse_count(detail::trim(value.substr(range + 2)), where);
    if (hi < lo) throw ConfigError(where + ": range '" + value + "' is descending");
    std::vector<std::size_t> out;
    for (std::size_t v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::vector<std::size_t> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = detail::trim(item);
    if (item.empty()) continue;
    out.push_back(detail::parse_count(item, where));
  }
  if (out.empty()) throw ConfigError(where + ": empty list '" + value + "'");
  return out;
}

/// Applies one "key = value" assignment. Unknown keys are errors so typos
/// surface instead of silently falling back to defaults.
inline void apply_config_entry(RunConfig& config, const std::string& key,
                               const std::string& value) {
  if (key == "corpus") config.corpus_dir = value;
  else if (key == "qa") config.qa_path = value;
  else if (key == "workdir") config.workdir = value;
  else if (key == "chunk_sizes") config.chunk_sizes = parse_count_list(value, key);
  else if (key == "top_ks") config.top_ks = parse_count_list(value, key);
  else if (key == "context_length") config.context_length = detail::parse_count(value, key);
  else if (key == "max_output_tokens") config.max_output_tokens = detail::parse_count(value, key);
  else if (key == "parallelism") config.parallelism = detail::parse_count(value, key);
  else if (key == "provider") config.provider = value;
  else if (key == "embedder") config.embedder = value;
  else if (key == "scorer") config.scorer = value;
  else if (key == "epsilon_tie") config.epsilon_tie = detail::parse_real(value, key);
  else if (key == "seed") config.seed = detail::parse_count(value, key);
  else if (key == "archive_prompts") config.archive_prompts = detail::parse_bool(value, key);
  else if (key == "exclude_sentinels") config.exclude_sentinels = detail::parse_bool(value, key);
  else if (key == "n_per_doc") config.n_per_doc = detail::parse_count(value, key);
  else if (key == "model_name") config.model_name = value;
  else if (key == "llm_endpoint") config.llm_endpoint = value;
  else if (key == "api_key_env") config.api_key_env = value;
  else if (key == "embed_endpoint") config.embed_endpoint = value;
  else if (key == "embed_model") config.embed_model = value;
  else if (key == "embed_dim") config.embed_dim = detail::parse_count(value, key);
  else if (key == "batch_size") config.batch_size = detail::parse_count(value, key);
  else if (key == "scorer_endpoint") config.scorer_endpoint = value;
  else if (key == "scorer_model") config.scorer_model = value;
  else if (key == "retries") config.retries = static_cast<int>(detail::parse_count(value, key));
  else if (key == "retry_delay_ms") config.retry_delay_ms = static_cast<int>(detail::parse_count(value, key));
  else throw ConfigError("unknown config key '" + key + "'");
}

/// Loads a key-table config file: one "key = value" per line, '#' comments.
inline void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open config file: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + " line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    try {
      apply_config_entry(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + " line " + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
}

/// Renders the effective configuration, one key per line, stable order.
inline std::string effective_config_text(const RunConfig& c) {
  std::ostringstream out;
  auto list = [](const std::vector<std::size_t>& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(values[i]);
    }
    return s;
  };
  out << "api_key_env = " << c.api_key_env << "\n";
  out << "archive_prompts = " << (c.archive_prompts ? "true" : "false") << "\n";
  out << "batch_size = " << c.batch_size << "\n";
  out << "chunk_sizes = " << list(c.chunk_sizes) << "\n";
  out << "context_length = " << c.context_length << "\n";
  out << "corpus = " << c.corpus_dir.string() << "\n";
  out << "embed_dim = " << c.embed_dim << "\n";
  out << "embed_endpoint = " << c.embed_endpoint << "\n";
  out << "embed_model = " << c.embed_model << "\n";
  out << "embedder = " << c.embedder << "\n";
  out << "epsilon_tie = " << c.epsilon_tie << "\n";
  out << "exclude_sentinels = " << (c.exclude_sentinels ? "true" : "false") << "\n";
  out << "llm_endpoint = " << c.llm_endpoint << "\n";
  out << "max_output_tokens = " << c.max_output_tokens << "\n";
  out << "model_name = " << c.model_name << "\n";
  out << "n_per_doc = " << c.n_per_doc << "\n";
  out << "parallelism = " << c.parallelism << "\n";
  out << "provider = " << c.provider << "\n";
  out << "qa = " << c.effective_qa_path().string() << "\n";
  out << "retries = " << c.retries << "\n";
  out << "retry_delay_ms = " << c.retry_delay_ms << "\n";
  out << "scorer = " << c.scorer << "\n";
  out << "scorer_endpoint = " << c.scorer_endpoint << "\n";
  out << "scorer_model = " << c.scorer_model << "\n";
  out << "seed = " << c.seed << "\n";
  out << "top_ks = " << list(c.top_ks) << "\n";
  out << "workdir = " << c.workdir.string() << "\n";
  return out.str();
}

}  // namespace cwu
