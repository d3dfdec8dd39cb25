#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "cwu/evaluator.hpp"
#include "cwu/sweep.hpp"

namespace cwu {

inline nlohmann::json cell_to_json(const SweepCell& c) {
  return nlohmann::json{{"chunk_size", c.chunk_size},
                        {"k", c.top_k},
                        {"mean_S", c.mean_similarity},
                        {"mean_cwu_actual", c.mean_cwu_actual},
                        {"nominal_cwu", c.nominal_cwu},
                        {"n_ok", c.n_ok},
                        {"n_overflow", c.n_overflow},
                        {"n_api_error", c.n_api_error}};
}

inline SweepCell cell_from_json(const nlohmann::json& j) {
  SweepCell c;
  c.chunk_size = j.at("chunk_size").get<std::size_t>();
  c.top_k = j.at("k").get<std::size_t>();
  c.mean_similarity = j.at("mean_S").get<double>();
  c.mean_cwu_actual = j.at("mean_cwu_actual").get<double>();
  c.nominal_cwu = j.at("nominal_cwu").get<double>();
  c.n_ok = j.at("n_ok").get<std::size_t>();
  c.n_overflow = j.at("n_overflow").get<std::size_t>();
  c.n_api_error = j.at("n_api_error").get<std::size_t>();
  return c;
}

inline nlohmann::json optimum_entry_to_json(const OptimumEntry& e) {
  return nlohmann::json{{"chunk_size", e.chunk_size},
                        {"k", e.top_k},
                        {"mean_S", e.mean_similarity},
                        {"mean_cwu_actual", e.mean_cwu_actual}};
}

inline OptimumEntry optimum_entry_from_json(const nlohmann::json& j) {
  OptimumEntry e;
  e.chunk_size = j.at("chunk_size").get<std::size_t>();
  e.top_k = j.at("k").get<std::size_t>();
  e.mean_similarity = j.at("mean_S").get<double>();
  e.mean_cwu_actual = j.at("mean_cwu_actual").get<double>();
  return e;
}

inline nlohmann::json optimum_to_json(const OptimumReport& o) {
  nlohmann::json co = nlohmann::json::array();
  for (const auto& e : o.co_optimal) co.push_back(optimum_entry_to_json(e));
  return nlohmann::json{{"best", optimum_entry_to_json(o.best)},
                        {"co_optimal", co},
                        {"rationale", o.rationale}};
}

inline OptimumReport optimum_from_json(const nlohmann::json& j) {
  OptimumReport o;
  o.best = optimum_entry_from_json(j.at("best"));
  for (const auto& e : j.at("co_optimal")) {
    o.co_optimal.push_back(optimum_entry_from_json(e));
  }
  o.rationale = j.at("rationale").get<std::string>();
  return o;
}

inline nlohmann::json sweep_result_to_json(const SweepResult& result) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : result.cells) cells.push_back(cell_to_json(c));
  return nlohmann::json{
      {"meta",
       {{"config", result.meta.config},
        {"tokenizer",
         {{"name", result.meta.tokenizer.name},
          {"version", result.meta.tokenizer.version}}},
        {"timestamps",
         {{"started", result.meta.started}, {"finished", result.meta.finished}}}}},
      {"cells", cells},
      {"optimum", optimum_to_json(result.optimum)}};
}

/// Rebuilds cells, optimum and meta from sweep.json content. Records are not
/// part of sweep.json; load them from records.jsonl when needed.
inline SweepResult sweep_result_from_json(const nlohmann::json& j) {
  SweepResult result;
  const auto& meta = j.at("meta");
  result.meta.config = meta.at("config");
  result.meta.tokenizer.name = meta.at("tokenizer").at("name").get<std::string>();
  result.meta.tokenizer.version = meta.at("tokenizer").at("version").get<std::string>();
  result.meta.started = meta.at("timestamps").at("started").get<std::string>();
  result.meta.finished = meta.at("timestamps").at("finished").get<std::string>();
  for (const auto& c : j.at("cells")) result.cells.push_back(cell_from_json(c));
  result.optimum = optimum_from_json(j.at("optimum"));
  return result;
}

inline std::filesystem::path prompt_archive_path(const std::filesystem::path& workdir,
                                                 std::size_t record_index) {
  char name[32];
  std::snprintf(name, sizeof(name), "record_%06zu.txt", record_index);
  return workdir / "prompts" / name;
}

/// Writes sweep.json and records.jsonl (and the rendered prompt archive when
/// present) under workdir.
inline void write_sweep_outputs(const SweepResult& result,
                                const std::filesystem::path& workdir) {
  std::filesystem::create_directories(workdir);
  {
    std::ofstream out(workdir / "sweep.json", std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot write " + (workdir / "sweep.json").string());
    }
    out << sweep_result_to_json(result).dump(2) << "\n";
  }
  save_records(result.records, workdir / "records.jsonl");
  if (!result.rendered_prompts.empty()) {
    std::filesystem::create_directories(workdir / "prompts");
    for (std::size_t i = 0; i < result.rendered_prompts.size(); ++i) {
      std::ofstream out(prompt_archive_path(workdir, i),
                        std::ios::binary | std::ios::trunc);
      out << result.rendered_prompts[i];
    }
  }
}

inline SweepResult load_sweep_result(const std::filesystem::path& workdir) {
  const auto path = workdir / "sweep.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": invalid JSON: " + e.what());
  }
  return sweep_result_from_json(j);
}

}  // namespace cwu
