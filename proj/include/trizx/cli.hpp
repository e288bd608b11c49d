// Copyright 2026 The trizx Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TRIZX_CLI_HPP_
#define TRIZX_CLI_HPP_

// Command-line front end. Exit codes: 0 success, 1 data error, 2 config
// error, 3 backend error. Machine-readable output goes to `out`; logs go to
// `err`.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "trizx/embedding.hpp"
#include "trizx/error.hpp"
#include "trizx/evaluation.hpp"
#include "trizx/knowledge_base.hpp"
#include "trizx/llm.hpp"
#include "trizx/pipeline.hpp"
#include "trizx/prompting.hpp"
#include "trizx/remote.hpp"
#include "trizx/rerank.hpp"
#include "trizx/retrieval.hpp"

#ifndef TRIZX_DEFAULT_KB
#define TRIZX_DEFAULT_KB "data/triz_parameters.jsonl"
#endif

namespace trizx::cli {

enum ExitCode : int {
  kOk = 0,
  kDataError = 1,
  kConfigError = 2,
  kBackendError = 3,
};

// Reranker weights used when no --params file is given: trained on a seeded
// synthetic corpus drawn from the knowledge base itself.
inline constexpr std::size_t kDefaultTrainingRecords = 1000;
inline constexpr double kDefaultTrainingNoise = 0.3;
inline constexpr std::uint64_t kDefaultTrainingSeed = 20240601;

struct Options {
  std::string kb = TRIZX_DEFAULT_KB;
  std::string index;
  std::string dataset;
  std::string sentence;
  std::string backend = "mock";
  std::string embedder = "hash";
  std::size_t dim = kDefaultEmbeddingDim;
  std::size_t k = kDefaultTopK;
  std::size_t m = kDefaultRefinedSize;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  double noise = 0.0;
  std::size_t synthetic = 0;
  std::uint64_t synth_seed = 42;
  std::size_t count = 200;
  std::size_t jobs = 1;
  std::string out;
  std::string trace;
  std::string params;
  std::string prompt_template;
  std::string ablation = "full";
  bool ablate = false;
  bool json = false;
};

namespace detail {

inline KnowledgeBase load_kb(const std::string& path, std::ostream& err) {
  if (!std::filesystem::exists(path)) throw ConfigError("knowledge base not found: " + path);
  std::vector<std::string> warnings;
  auto kb = load_parameters(path, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  return kb;
}

inline std::unique_ptr<Embedder> make_embedder(const Options& o) {
  if (o.embedder == "hash") return std::make_unique<HashingEmbedder>(o.dim);
  if (o.embedder == "remote") {
    return std::make_unique<RemoteEmbedder>(RemoteEmbedderConfig::from_env(o.dim));
  }
  throw ConfigError("unknown embedder '" + o.embedder + "'");
}

inline std::unique_ptr<LlmBackend> make_backend(const Options& o, const KnowledgeBase& kb,
                                                const PromptTemplate& tmpl) {
  if (o.backend == "mock") return std::make_unique<MockBackend>(kb, tmpl);
  if (o.backend == "remote") {
    return std::make_unique<RemoteBackend>(RemoteBackendConfig::from_env());
  }
  throw ConfigError("unknown backend '" + o.backend + "'");
}

inline PromptTemplate make_template(const Options& o) {
  return o.prompt_template.empty() ? PromptTemplate{} : load_template(o.prompt_template);
}

inline VectorIndex make_index(const Options& o, const KnowledgeBase& kb, const Embedder& emb) {
  return o.index.empty() ? build_index(kb, emb) : load_index(o.index, kb, emb);
}

inline RerankerParams default_params(const KnowledgeBase& kb, const VectorIndex& index,
                                     const Embedder& emb) {
  const auto records =
      generate_synthetic(kb, kDefaultTrainingRecords, kDefaultTrainingNoise, kDefaultTrainingSeed);
  Rng rng(kDefaultTrainingSeed);
  const auto triples = make_training_triples(records, kb, index, emb, rng);
  TrainConfig tc;
  tc.seed = kDefaultTrainingSeed;
  return train_reranker(triples, kb, tc).params;
}

inline PipelineConfig make_config(const Options& o) {
  PipelineConfig c;
  c.k = o.k;
  c.m = o.m;
  c.ablation = parse_ablation(o.ablation);
  c.backend = o.backend == "remote" ? BackendKind::kRemote : BackendKind::kMock;
  c.jobs = o.jobs;
  return c;
}

// Output sink: --out file if given, else `out`.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw ConfigError("cannot write " + path);
      os_ = &file_;
    }
  }
  std::ostream& stream() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

inline nlohmann::ordered_json slot_json(const std::optional<int>& id, const KnowledgeBase& kb) {
  if (!id) return nullptr;
  const auto* p = kb.find_parameter(*id);
  return {{"id", *id}, {"name", p != nullptr ? p->name : ""}};
}

// Sentences from --sentence, or one per line of --dataset. Dataset lines that
// are JSON objects contribute their "sentence" field; other lines are taken
// as plain sentences.
inline std::vector<std::string> read_sentences(const Options& o) {
  if (!o.sentence.empty()) return {o.sentence};
  std::ifstream in(o.dataset, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + o.dataset);
  std::vector<std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (trim(line).front() == '{') {
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("sentence") || !j["sentence"].is_string()) {
        throw LoadError("expected an object with a 'sentence' string", lineno);
      }
      out.push_back(j["sentence"].get<std::string>());
    } else {
      out.push_back(line);
    }
  }
  return out;
}

inline std::vector<DatasetRecord> evaluation_records(const Options& o, const KnowledgeBase& kb,
                                                     std::ostream& err) {
  if (o.synthetic > 0) return generate_synthetic(kb, o.synthetic, o.noise, o.synth_seed);
  if (o.dataset.empty()) throw ConfigError("evaluate needs --dataset or --synthetic");
  if (!std::filesystem::exists(o.dataset)) throw ConfigError("dataset not found: " + o.dataset);
  std::vector<std::string> warnings;
  auto records = load_dataset(o.dataset, kb, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  return records;
}

}  // namespace detail

inline int cmd_kb_validate(const Options& o, std::ostream& out, std::ostream& err) {
  if (!std::filesystem::exists(o.kb)) throw ConfigError("knowledge base not found: " + o.kb);
  nlohmann::ordered_json j;
  j["path"] = o.kb;
  try {
    std::vector<std::string> warnings;
    const auto kb = load_parameters(o.kb, &warnings);
    const auto violations = validate_kb(kb);
    j["valid"] = violations.empty();
    j["parameters"] = kb.parameters().size();
    j["entries"] = kb.entry_count();
    j["content_hash"] = kb.content_hash();
    j["violations"] = nlohmann::json::array();
    for (const auto& v : violations) {
      j["violations"].push_back({{"kind", to_string(v.kind)}, {"message", v.message}});
    }
    j["warnings"] = warnings;
    out << j.dump(2) << '\n';
    return violations.empty() ? kOk : kDataError;
  } catch (const DataError& e) {
    j["valid"] = false;
    j["error"] = e.what();
    out << j.dump(2) << '\n';
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

inline int cmd_index_build(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.out.empty()) throw ConfigError("index build needs --out");
  const auto kb = detail::load_kb(o.kb, err);
  const auto emb = detail::make_embedder(o);
  const auto index = build_index(kb, *emb);
  save_index(index, o.out);
  nlohmann::ordered_json j = {{"out", o.out},
                              {"dim", index.dim()},
                              {"count", index.size()},
                              {"kb_hash", index.kb_hash()},
                              {"embedder", index.embedder_id()}};
  out << j.dump() << '\n';
  return kOk;
}

inline int cmd_extract(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.sentence.empty() && o.dataset.empty()) {
    throw ConfigError("extract needs --sentence or --dataset");
  }
  const auto kb = detail::load_kb(o.kb, err);
  const auto tmpl = detail::make_template(o);
  const auto emb = detail::make_embedder(o);
  const auto backend = detail::make_backend(o, kb, tmpl);
  const auto index = detail::make_index(o, kb, *emb);
  const auto params =
      o.params.empty() ? detail::default_params(kb, index, *emb) : load_params(o.params);
  const auto sentences = detail::read_sentences(o);

  Pipeline pipeline(kb, index, params, *emb, *backend, detail::make_config(o), tmpl);
  std::ofstream trace_file;
  std::unique_ptr<TraceWriter> trace;
  if (!o.trace.empty()) {
    trace_file.open(o.trace, std::ios::binary);
    if (!trace_file) throw ConfigError("cannot write " + o.trace);
    trace = std::make_unique<TraceWriter>(trace_file);
  }
  const auto results = pipeline.extract_all(sentences, trace.get());

  detail::Sink sink(o.out, out);
  bool backend_failed = false;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    nlohmann::ordered_json j;
    j["sentence"] = sentences[i];
    j["improving"] = detail::slot_json(r.pair.improving, kb);
    j["worsening"] = detail::slot_json(r.pair.worsening, kb);
    if (r.trace.backend_error) {
      j["error"] = "backend";
      backend_failed = true;
    } else if (r.trace.parse_failed) {
      j["error"] = "parse";
    }
    sink.stream() << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  }
  err << "processed " << results.size() << " sentence(s)\n";
  return backend_failed ? kBackendError : kOk;
}

inline int cmd_evaluate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto kb = detail::load_kb(o.kb, err);
  const auto tmpl = detail::make_template(o);
  const auto emb = detail::make_embedder(o);
  const auto backend = detail::make_backend(o, kb, tmpl);
  const auto index = detail::make_index(o, kb, *emb);
  const auto records = detail::evaluation_records(o, kb, err);

  std::ofstream trace_file;
  std::unique_ptr<TraceWriter> trace;
  if (!o.trace.empty()) {
    trace_file.open(o.trace, std::ios::binary);
    if (!trace_file) throw ConfigError("cannot write " + o.trace);
    trace = std::make_unique<TraceWriter>(trace_file);
  }
  EvaluationContext ctx{kb, index, *emb, *backend, tmpl};
  if (trace) {
    ctx.on_result = [&trace](std::uint64_t, const DatasetRecord&, const ExtractionResult& r) {
      trace->write(r.trace);
    };
  }
  const auto cfg = detail::make_config(o);

  nlohmann::json payload;
  std::vector<TableRow> rows;
  bool partial = false;
  if (o.ablate) {
    const auto report = run_ablation(cfg, records, o.seeds, ctx);
    payload = ablation_to_json(report);
    for (const auto& [variant, r] : report.variants) {
      rows.push_back(table_row(ablation_label(variant), r));
      partial = partial || r.partial;
    }
  } else {
    const auto report = run_evaluation(cfg, records, o.seeds, ctx);
    payload = report_to_json(report);
    rows.push_back(table_row(ablation_label(cfg.ablation), report));
    partial = report.partial;
  }

  if (!o.out.empty()) {
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + o.out);
    f << payload.dump(2) << '\n';
  }
  if (o.json) {
    out << payload.dump(2) << '\n';
  } else {
    out << format_table(rows);
  }
  if (partial) err << "warning: some seeds failed; report is partial\n";
  return kOk;
}

inline int cmd_synth(const Options& o, std::ostream& out, std::ostream& err) {
  const auto kb = detail::load_kb(o.kb, err);
  const auto records = generate_synthetic(kb, o.count, o.noise, o.synth_seed);
  detail::Sink sink(o.out, out);
  save_dataset(records, sink.stream());
  return kOk;
}

namespace detail {

inline constexpr const char* kKbHelp =
    "Parameter knowledge base (JSONL); defaults to the bundled 39-parameter file";

inline void add_common(CLI::App* app, Options& o) {
  app->add_option("--kb", o.kb, kKbHelp);
  app->add_option("--embedder", o.embedder, "Embedder; remote reads TRN_EMBEDDER_URL")
      ->check(CLI::IsMember({"hash", "remote"}))
      ->capture_default_str();
  app->add_option("--dim", o.dim, "Embedding dimension")->capture_default_str();
}

inline void add_pipeline(CLI::App* app, Options& o) {
  app->add_option("--index", o.index, "Prebuilt index sidecar (JSON); built on the fly if absent");
  app->add_option("--backend", o.backend, "LLM backend; remote reads TRN_BACKEND_*")
      ->check(CLI::IsMember({"mock", "remote"}))
      ->capture_default_str();
  app->add_option("--k", o.k, "Retrieval depth")->capture_default_str();
  app->add_option("--m", o.m, "Refined context size")->capture_default_str();
  app->add_option("--jobs", o.jobs, "Sentences processed concurrently")->capture_default_str();
  app->add_option("--template", o.prompt_template, "Prompt template (JSON)");
  app->add_option("--trace", o.trace, "Write per-sentence trace records (JSONL) here");
  app->add_option("--ablation", o.ablation, "Pipeline variant")
      ->check(CLI::IsMember({"full", "no_retrieval", "no_rerank", "no_structured_prompt"}))
      ->capture_default_str();
}

inline void add_evaluate(CLI::App* app, Options& o) {
  add_pipeline(app, o);
  app->add_option("--dataset", o.dataset, "Dataset (JSONL)");
  app->add_option("--synthetic", o.synthetic,
                  "Evaluate on N generated records instead of --dataset");
  app->add_option("--noise", o.noise, "Paraphrase probability for --synthetic")
      ->capture_default_str();
  app->add_option("--synth-seed", o.synth_seed, "Seed for --synthetic")->capture_default_str();
  app->add_option("--seeds", o.seeds, "Comma-separated run seeds")
      ->delimiter(',')
      ->capture_default_str();
  app->add_option("--out", o.out, "Write the JSON report here");
  app->add_flag("--json", o.json, "Print the JSON report instead of the table");
}

}  // namespace detail

inline std::unique_ptr<CLI::App> make_app(Options& o) {
  auto app =
      std::make_unique<CLI::App>("Extract improving/worsening TRIZ parameter pairs", "trizx");
  app->require_subcommand(1);

  auto* kb = app->add_subcommand("kb", "Knowledge base commands");
  kb->require_subcommand(1);
  auto* validate = kb->add_subcommand("validate", "Load and validate a parameter file");
  validate->add_option("--kb", o.kb, detail::kKbHelp);

  auto* index = app->add_subcommand("index", "Vector index commands");
  index->require_subcommand(1);
  auto* build = index->add_subcommand("build", "Embed every entry and write the index sidecar");
  detail::add_common(build, o);
  build->add_option("--out", o.out, "Output path")->required();

  auto* extract = app->add_subcommand("extract", "Extract parameter pairs from sentences");
  detail::add_common(extract, o);
  detail::add_pipeline(extract, o);
  extract->add_option("--params", o.params,
                      "Reranker params (JSON); trained on synthetic data if absent");
  extract->add_option("--sentence", o.sentence, "Single input sentence");
  extract->add_option("--dataset", o.dataset,
                      "Input file: one sentence or dataset record per line");
  extract->add_option("--out", o.out, "Write JSON lines here instead of stdout");

  auto* evaluate = app->add_subcommand("evaluate", "Score the pipeline over seeded splits");
  detail::add_common(evaluate, o);
  detail::add_evaluate(evaluate, o);
  evaluate->add_flag("--ablate", o.ablate, "Run all four pipeline variants");

  auto* ablate = app->add_subcommand("ablate", "Same as evaluate --ablate");
  detail::add_common(ablate, o);
  detail::add_evaluate(ablate, o);

  auto* synth = app->add_subcommand("synth", "Generate a synthetic dataset (JSONL)");
  synth->add_option("--kb", o.kb, detail::kKbHelp);
  synth->add_option("-n,--count", o.count, "Number of records")->capture_default_str();
  synth->add_option("--noise", o.noise, "Paraphrase probability")->capture_default_str();
  synth->add_option("--seed", o.synth_seed, "Generator seed")->capture_default_str();
  synth->add_option("--out", o.out, "Output path (stdout if absent)");
  return app;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  auto app = make_app(o);
  try {
    app->parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app->help("", CLI::AppFormatMode::Normal);
    return kOk;
  } catch (const CLI::ParseError& e) {
    // Subcommand help and errors both land here.
    if (e.get_exit_code() == 0) {
      std::ostringstream help_out;
      app->exit(e, help_out, err);
      out << help_out.str();
      return kOk;
    }
    app->exit(e, out, err);
    return kConfigError;
  }

  try {
    auto* sub = app->get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "kb") return cmd_kb_validate(o, out, err);
    if (name == "index") return cmd_index_build(o, out, err);
    if (name == "extract") {
      if (o.sentence.empty() && o.dataset.empty()) {
        err << "error: extract needs --sentence or --dataset\n" << sub->help();
        return kConfigError;
      }
      return cmd_extract(o, out, err);
    }
    if (name == "evaluate") return cmd_evaluate(o, out, err);
    if (name == "ablate") {
      o.ablate = true;
      return cmd_evaluate(o, out, err);
    }
    if (name == "synth") return cmd_synth(o, out, err);
    throw ConfigError("unknown command " + name);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << '\n';
    return kBackendError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace trizx::cli

#endif  // TRIZX_CLI_HPP_
