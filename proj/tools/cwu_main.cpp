#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cwu/chunker.hpp"
#include "cwu/config.hpp"
#include "cwu/embedding.hpp"
#include "cwu/llm.hpp"
#include "cwu/qa_dataset.hpp"
#include "cwu/remote_embedder.hpp"
#include "cwu/remote_llm.hpp"
#include "cwu/report.hpp"
#include "cwu/sweep.hpp"
#include "cwu/sweep_io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitMissingInput = 2;
constexpr int kExitProviderMisconfig = 3;
constexpr int kExitSweepAborted = 4;

struct ProviderBundle {
  std::unique_ptr<cwu::EmbeddingProvider> embedder;
  std::unique_ptr<cwu::EmbeddingProvider> scorer;
  std::unique_ptr<cwu::GenerationProvider> llm;
  cwu::ModelProfile profile;
  std::string embedder_desc;
  std::string scorer_desc;
  std::string llm_desc;
};

cwu::EmbeddingProviderConfig remote_embed_config(const cwu::RunConfig& cfg,
                                                 const std::string& endpoint,
                                                 const std::string& model) {
  cwu::EmbeddingProviderConfig pc;
  pc.kind = cwu::EmbeddingProviderConfig::Kind::remote;
  pc.endpoint_url = endpoint;
  pc.model_name = model;
  pc.batch_size = cfg.batch_size;
  pc.api_key_env = cfg.api_key_env;
  pc.max_retries = cfg.retries;
  pc.retry_delay_ms = cfg.retry_delay_ms;
  return pc;
}

std::unique_ptr<cwu::EmbeddingProvider> make_embedder(const cwu::RunConfig& cfg,
                                                      std::string& desc) {
  if (cfg.embedder == "hashing") {
    desc = "hashing(dim=" + std::to_string(cfg.embed_dim) + ")";
    return std::make_unique<cwu::HashingEmbedder>(cfg.embed_dim);
  }
  if (cfg.embedder == "remote") {
    if (cfg.embed_endpoint.empty()) {
      throw cwu::ConfigError("embedder 'remote' requires embed_endpoint");
    }
    desc = "remote(" + cfg.embed_model + " @ " + cfg.embed_endpoint + ")";
    return std::make_unique<cwu::RemoteEmbedder>(
        remote_embed_config(cfg, cfg.embed_endpoint, cfg.embed_model));
  }
  throw cwu::ConfigError("unknown embedder '" + cfg.embedder +
                         "' (expected hashing or remote)");
}

std::unique_ptr<cwu::EmbeddingProvider> make_scorer(const cwu::RunConfig& cfg,
                                                    std::string& desc) {
  if (cfg.scorer == "same") {
    cwu::RunConfig same = cfg;
    same.scorer = cfg.embedder;  // fresh instance with the embedder settings
    return make_embedder(same, desc);
  }
  if (cfg.scorer == "hashing") {
    desc = "hashing(dim=" + std::to_string(cfg.embed_dim) + ")";
    return std::make_unique<cwu::HashingEmbedder>(cfg.embed_dim);
  }
  if (cfg.scorer == "remote") {
    const std::string endpoint =
        cfg.scorer_endpoint.empty() ? cfg.embed_endpoint : cfg.scorer_endpoint;
    const std::string model =
        cfg.scorer_model.empty() ? cfg.embed_model : cfg.scorer_model;
    if (endpoint.empty()) {
      throw cwu::ConfigError("scorer 'remote' requires scorer_endpoint or embed_endpoint");
    }
    desc = "remote(" + model + " @ " + endpoint + ")";
    return std::make_unique<cwu::RemoteEmbedder>(remote_embed_config(cfg, endpoint, model));
  }
  throw cwu::ConfigError("unknown scorer '" + cfg.scorer +
                         "' (expected same, hashing or remote)");
}

ProviderBundle make_providers(const cwu::RunConfig& cfg) {
  ProviderBundle bundle;
  bundle.embedder = make_embedder(cfg, bundle.embedder_desc);
  bundle.scorer = make_scorer(cfg, bundle.scorer_desc);

  bundle.profile.context_length = cfg.context_length;
  bundle.profile.max_output_tokens = cfg.max_output_tokens;
  bundle.profile.api_key_env = cfg.api_key_env;
  if (cfg.provider == "mock") {
    bundle.profile.name = cfg.model_name.empty() ? "mock-extractive" : cfg.model_name;
    bundle.llm_desc = "mock";
    bundle.llm = std::make_unique<cwu::MockExtractiveLlm>();
  } else if (cfg.provider == "remote") {
    if (cfg.llm_endpoint.empty()) {
      throw cwu::ConfigError("provider 'remote' requires llm_endpoint");
    }
    if (cfg.model_name.empty()) {
      throw cwu::ConfigError("provider 'remote' requires model_name");
    }
    bundle.profile.name = cfg.model_name;
    bundle.profile.endpoint_url = cfg.llm_endpoint;
    bundle.llm_desc = "remote(" + cfg.model_name + " @ " + cfg.llm_endpoint + ")";
    cwu::RemoteLlmConfig rc;
    rc.max_retries = cfg.retries;
    rc.retry_delay_ms = cfg.retry_delay_ms;
    bundle.llm = std::make_unique<cwu::RemoteChatProvider>(rc);
  } else {
    throw cwu::ConfigError("unknown provider '" + cfg.provider +
                           "' (expected mock or remote)");
  }
  return bundle;
}

std::vector<cwu::Document> load_corpus_checked(const cwu::RunConfig& cfg) {
  if (cfg.corpus_dir.empty() || !fs::is_directory(cfg.corpus_dir)) {
    throw cwu::MissingInputError("corpus directory not found: " +
                                 cfg.corpus_dir.string());
  }
  auto docs = cwu::load_corpus(cfg.corpus_dir);
  if (docs.empty()) {
    throw cwu::MissingInputError("corpus has no .txt documents: " +
                                 cfg.corpus_dir.string());
  }
  return docs;
}

void announce_config(const cwu::RunConfig& cfg, bool archive) {
  const std::string text = cwu::effective_config_text(cfg);
  std::cout << "effective configuration:\n" << text;
  if (archive) {
    fs::create_directories(cfg.workdir);
    std::ofstream out(cfg.workdir / "effective_config.txt",
                      std::ios::binary | std::ios::trunc);
    out << text;
  }
}

cwu::SweepConfig to_sweep_config(const cwu::RunConfig& cfg, const ProviderBundle& p) {
  cwu::SweepConfig sc;
  sc.chunk_sizes = cfg.chunk_sizes;
  sc.top_ks = cfg.top_ks;
  sc.model = p.profile;
  sc.epsilon_tie = cfg.epsilon_tie;
  sc.parallelism = cfg.parallelism;
  sc.seed = cfg.seed;
  sc.workdir = cfg.workdir;
  sc.archive_prompts = cfg.archive_prompts;
  sc.embedder_desc = p.embedder_desc;
  sc.scorer_desc = p.scorer_desc;
  sc.llm_desc = p.llm_desc;
  return sc;
}

int cmd_ingest(const cwu::RunConfig& cfg) {
  const auto docs = load_corpus_checked(cfg);
  std::size_t total_sentences = 0;
  std::size_t total_tokens = 0;
  std::printf("%-40s %10s %10s\n", "document", "sentences", "tokens");
  for (const auto& doc : docs) {
    const std::size_t tokens = cwu::count_tokens(doc.text);
    total_sentences += doc.sentences.size();
    total_tokens += tokens;
    std::printf("%-40s %10zu %10zu\n", doc.id.c_str(), doc.sentences.size(), tokens);
  }
  std::printf("%-40s %10zu %10zu\n",
              ("total (" + std::to_string(docs.size()) + " docs)").c_str(),
              total_sentences, total_tokens);
  return kExitOk;
}

int cmd_genqa(const cwu::RunConfig& cfg) {
  const auto docs = load_corpus_checked(cfg);
  const auto bundle = make_providers(cfg);
  announce_config(cfg, /*archive=*/true);

  cwu::QaGenReport report;
  const auto pairs =
      cwu::generate_qa(*bundle.llm, bundle.profile, docs, cfg.n_per_doc, &report);
  fs::create_directories(cfg.effective_qa_path().parent_path());
  cwu::save_qa(pairs, cfg.effective_qa_path());
  std::cout << "generated " << pairs.size() << " QA pairs from " << report.documents
            << " documents -> " << cfg.effective_qa_path().string() << "\n";
  std::cout << "  truncated docs: " << report.truncated_docs
            << ", dropped lines: " << report.dropped_lines
            << ", failed docs: " << report.failed_docs.size() << "\n";
  for (const auto& id : report.failed_docs) {
    std::cout << "  no pairs from: " << id << "\n";
  }
  return kExitOk;
}

int cmd_sweep(const cwu::RunConfig& cfg) {
  const auto docs = load_corpus_checked(cfg);
  if (!fs::exists(cfg.effective_qa_path())) {
    throw cwu::MissingInputError("QA file not found: " +
                                 cfg.effective_qa_path().string() +
                                 " (run 'cwu genqa' or pass --qa)");
  }
  const auto qa_pairs = cwu::load_qa(cfg.effective_qa_path());
  const auto bundle = make_providers(cfg);
  announce_config(cfg, /*archive=*/true);

  const auto result = cwu::run_sweep(to_sweep_config(cfg, bundle), docs, qa_pairs,
                                     *bundle.embedder, *bundle.scorer, *bundle.llm);
  cwu::write_sweep_outputs(result, cfg.workdir);
  std::vector<cwu::EvalRecord> records;
  const std::vector<cwu::EvalRecord>* view = nullptr;
  if (cfg.exclude_sentinels) {
    view = &result.records;
  }
  cwu::write_report_files(result, cfg.workdir, view);

  const auto& best = result.optimum.best;
  std::cout << "sweep complete: " << result.records.size() << " trials over "
            << result.cells.size() << " cells\n";
  std::printf("optimum: chunk_size=%zu top_k=%zu mean_S=%.4f mean_CWU=%.1f%%\n",
              best.chunk_size, best.top_k, best.mean_similarity,
              100.0 * best.mean_cwu_actual);
  if (result.optimum.co_optimal.size() > 1) {
    std::cout << "co-optimal cells (within epsilon " << cfg.epsilon_tie << "):\n";
    for (const auto& e : result.optimum.co_optimal) {
      std::printf("  chunk_size=%zu top_k=%zu mean_S=%.4f\n", e.chunk_size, e.top_k,
                  e.mean_similarity);
    }
  }
  std::cout << "outputs in " << cfg.workdir.string() << ": sweep.json, records.jsonl, report/\n";
  return kExitOk;
}

int cmd_report(const cwu::RunConfig& cfg) {
  const auto sweep_path = cfg.workdir / "sweep.json";
  if (!fs::exists(sweep_path)) {
    throw cwu::MissingInputError("no sweep.json in workdir: " + sweep_path.string() +
                                 " (run 'cwu sweep' first)");
  }
  const auto result = cwu::load_sweep_result(cfg.workdir);
  std::vector<cwu::EvalRecord> records;
  const std::vector<cwu::EvalRecord>* view = nullptr;
  if (cfg.exclude_sentinels) {
    const auto records_path = cfg.workdir / "records.jsonl";
    if (!fs::exists(records_path)) {
      throw cwu::MissingInputError("no records.jsonl in workdir: " +
                                   records_path.string());
    }
    records = cwu::load_records(records_path);
    view = &records;
  }
  cwu::write_report_files(result, cfg.workdir, view);
  std::cout << "report files written to " << (cfg.workdir / "report").string() << "\n";
  return kExitOk;
}

int cmd_validate(const cwu::RunConfig& cfg) {
  const auto docs = load_corpus_checked(cfg);
  announce_config(cfg, /*archive=*/false);

  std::cout << "chunk packing:\n";
  for (const auto chunk_size : cfg.chunk_sizes) {
    std::size_t n_chunks = 0;
    std::size_t n_oversized = 0;
    for (const auto& doc : docs) {
      for (const auto& c : cwu::pack_chunks(doc, chunk_size)) {
        ++n_chunks;
        if (c.oversized) ++n_oversized;
      }
    }
    std::printf("  C=%-6zu %8zu chunks, %zu oversized\n", chunk_size, n_chunks,
                n_oversized);
  }

  const std::size_t overhead =
      cwu::assemble_prompt("", {}).prompt_tokens;  // template with empty slots
  std::cout << "nominal CWU = C*k/L, * = guaranteed overflow (C*k + template "
            << overhead << " + max_output " << cfg.max_output_tokens << " > L="
            << cfg.context_length << "):\n";
  std::printf("%8s", "C\\k");
  for (const auto k : cfg.top_ks) std::printf(" %7zu", k);
  std::printf("\n");
  for (const auto c : cfg.chunk_sizes) {
    std::printf("%8zu", c);
    for (const auto k : cfg.top_ks) {
      const double nominal =
          static_cast<double>(c * k) / static_cast<double>(cfg.context_length);
      const bool overflow =
          c * k + overhead + cfg.max_output_tokens > cfg.context_length;
      std::printf(" %6.3f%c", nominal, overflow ? '*' : ' ');
    }
    std::printf("\n");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chunk-size / top-k sweeps with context window utilization accounting "
               "for retrieval-augmented generation"};
  app.require_subcommand(1);

  struct Flags {
    std::string config, corpus, qa, workdir, chunk_sizes, top_ks;
    std::string provider, embedder, scorer, model_name, llm_endpoint;
    std::string embed_endpoint, embed_model, api_key_env;
    std::size_t context_length = 0, max_output_tokens = 0, parallelism = 0;
    std::size_t n_per_doc = 0, embed_dim = 0, seed = 0;
    double epsilon_tie = 0.0;
    bool archive_prompts = false, exclude_sentinels = false;
  };

  auto add_common = [](CLI::App* cmd, Flags& f) {
    std::map<std::string, CLI::Option*> opts;
    opts["config"] = cmd->add_option("--config", f.config, "config file (key = value lines)");
    opts["corpus"] = cmd->add_option("--corpus", f.corpus, "corpus directory of .txt files");
    opts["qa"] = cmd->add_option("--qa", f.qa, "QA pairs JSONL path");
    opts["workdir"] = cmd->add_option("--workdir", f.workdir, "working directory for outputs");
    opts["chunk-sizes"] = cmd->add_option("--chunk-sizes", f.chunk_sizes,
                                          "chunk sizes, e.g. 128,256,512");
    opts["top-ks"] = cmd->add_option("--top-ks", f.top_ks, "top-k values, e.g. 1..12");
    opts["context-length"] = cmd->add_option("--context-length", f.context_length,
                                             "model context window L in tokens");
    opts["max-output-tokens"] = cmd->add_option("--max-output-tokens", f.max_output_tokens,
                                                "output budget reserved per call");
    opts["parallelism"] = cmd->add_option("--parallelism", f.parallelism,
                                          "worker threads for the sweep");
    opts["provider"] = cmd->add_option("--provider", f.provider, "mock | remote")
                           ->check(CLI::IsMember({"mock", "remote"}));
    opts["embedder"] = cmd->add_option("--embedder", f.embedder, "hashing | remote")
                           ->check(CLI::IsMember({"hashing", "remote"}));
    opts["scorer"] = cmd->add_option("--scorer", f.scorer, "same | hashing | remote")
                         ->check(CLI::IsMember({"same", "hashing", "remote"}));
    opts["epsilon-tie"] = cmd->add_option("--epsilon-tie", f.epsilon_tie,
                                          "co-optimality margin on mean similarity");
    opts["archive-prompts"] = cmd->add_flag("--archive-prompts", f.archive_prompts,
                                            "archive rendered prompts under workdir");
    opts["exclude-sentinels"] = cmd->add_flag("--exclude-sentinels", f.exclude_sentinels,
                                              "also emit the sentinel-free heatmap view");
    opts["model"] = cmd->add_option("--model", f.model_name, "remote model name");
    opts["llm-endpoint"] = cmd->add_option("--llm-endpoint", f.llm_endpoint,
                                           "chat completions base URL");
    opts["embed-endpoint"] = cmd->add_option("--embed-endpoint", f.embed_endpoint,
                                             "embeddings base URL");
    opts["embed-model"] = cmd->add_option("--embed-model", f.embed_model,
                                          "remote embedding model name");
    opts["embed-dim"] = cmd->add_option("--embed-dim", f.embed_dim,
                                        "hashing embedder dimension");
    opts["api-key-env"] = cmd->add_option("--api-key-env", f.api_key_env,
                                          "environment variable holding the API key");
    opts["n-per-doc"] = cmd->add_option("--n-per-doc", f.n_per_doc,
                                        "QA pairs requested per document");
    opts["seed"] = cmd->add_option("--seed", f.seed, "seed for any sampling");
    return opts;
  };

  auto build_config = [](const Flags& f,
                         const std::map<std::string, CLI::Option*>& opts) {
    cwu::RunConfig cfg;
    if (opts.at("config")->count()) cwu::apply_config_file(cfg, f.config);
    auto set = [&](const char* name, auto&& apply) {
      if (opts.at(name)->count()) apply();
    };
    set("corpus", [&] { cfg.corpus_dir = f.corpus; });
    set("qa", [&] { cfg.qa_path = f.qa; });
    set("workdir", [&] { cfg.workdir = f.workdir; });
    set("chunk-sizes",
        [&] { cfg.chunk_sizes = cwu::parse_count_list(f.chunk_sizes, "--chunk-sizes"); });
    set("top-ks", [&] { cfg.top_ks = cwu::parse_count_list(f.top_ks, "--top-ks"); });
    set("context-length", [&] { cfg.context_length = f.context_length; });
    set("max-output-tokens", [&] { cfg.max_output_tokens = f.max_output_tokens; });
    set("parallelism", [&] { cfg.parallelism = f.parallelism; });
    set("provider", [&] { cfg.provider = f.provider; });
    set("embedder", [&] { cfg.embedder = f.embedder; });
    set("scorer", [&] { cfg.scorer = f.scorer; });
    set("epsilon-tie", [&] { cfg.epsilon_tie = f.epsilon_tie; });
    set("archive-prompts", [&] { cfg.archive_prompts = f.archive_prompts; });
    set("exclude-sentinels", [&] { cfg.exclude_sentinels = f.exclude_sentinels; });
    set("model", [&] { cfg.model_name = f.model_name; });
    set("llm-endpoint", [&] { cfg.llm_endpoint = f.llm_endpoint; });
    set("embed-endpoint", [&] { cfg.embed_endpoint = f.embed_endpoint; });
    set("embed-model", [&] { cfg.embed_model = f.embed_model; });
    set("embed-dim", [&] { cfg.embed_dim = f.embed_dim; });
    set("api-key-env", [&] { cfg.api_key_env = f.api_key_env; });
    set("n-per-doc", [&] { cfg.n_per_doc = f.n_per_doc; });
    set("seed", [&] { cfg.seed = f.seed; });
    return cfg;
  };

  int exit_code = kExitOk;
  auto run = [&](auto&& handler, const Flags& f,
                 const std::map<std::string, CLI::Option*>& opts) {
    try {
      exit_code = handler(build_config(f, opts));
    } catch (const cwu::MissingInputError& e) {
      std::cerr << "error: " << e.what() << "\n";
      exit_code = kExitMissingInput;
    } catch (const cwu::ConfigError& e) {
      std::cerr << "error: " << e.what() << "\n";
      exit_code = kExitProviderMisconfig;
    } catch (const cwu::SweepAborted& e) {
      std::cerr << "error: " << e.what() << "\n";
      exit_code = kExitSweepAborted;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      exit_code = kExitFailure;
    }
  };

  Flags ingest_flags, genqa_flags, sweep_flags, report_flags, validate_flags;

  auto* ingest = app.add_subcommand("ingest", "scan a corpus and report per-document stats");
  auto ingest_opts = add_common(ingest, ingest_flags);
  ingest->callback([&] { run(cmd_ingest, ingest_flags, ingest_opts); });

  auto* genqa = app.add_subcommand("genqa", "generate reference QA pairs for a corpus");
  auto genqa_opts = add_common(genqa, genqa_flags);
  genqa->callback([&] { run(cmd_genqa, genqa_flags, genqa_opts); });

  auto* sweep = app.add_subcommand("sweep", "run the chunk-size x top-k grid sweep");
  auto sweep_opts = add_common(sweep, sweep_flags);
  sweep->callback([&] { run(cmd_sweep, sweep_flags, sweep_opts); });

  auto* report = app.add_subcommand("report", "regenerate report files from a workdir");
  auto report_opts = add_common(report, report_flags);
  report->callback([&] { run(cmd_report, report_flags, report_opts); });

  auto* validate = app.add_subcommand("validate", "dry-run: chunk counts and overflow map");
  auto validate_opts = add_common(validate, validate_flags);
  validate->callback([&] { run(cmd_validate, validate_flags, validate_opts); });

  CLI11_PARSE(app, argc, argv);
  return exit_code;
}
