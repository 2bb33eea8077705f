#include "selfqa/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "selfqa/corpus.hpp"
#include "selfqa/errors.hpp"
#include "selfqa/filter.hpp"
#include "selfqa/gateway.hpp"
#include "selfqa/parser.hpp"
#include "selfqa/pipeline.hpp"
#include "selfqa/prompts.hpp"
#include "selfqa/util.hpp"

namespace selfqa {
namespace {

using ordered_json = nlohmann::ordered_json;

struct CommonOptions {
  std::string backend = "mock";
  std::string endpoint;
  std::string model = "mock-model";
  uint64_t seed = 0;
  double corruption = 0.0;
  int max_retries = 3;
  double rate_limit = 50.0;
  int concurrency = 4;
  size_t max_chars = 2000;
  size_t overlap = 200;
  int n_questions = 10;
  std::string rules;
  std::string templates;
};

void add_backend_options(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--backend", opts.backend, "Backend kind: mock or http")
      ->check(CLI::IsMember({"mock", "http"}));
  cmd->add_option("--endpoint", opts.endpoint, "Completion API URL (http backend)");
  cmd->add_option("--model", opts.model, "Model identifier sent to the backend");
  cmd->add_option("--seed", opts.seed, "Mock backend seed");
  cmd->add_option("--corruption", opts.corruption, "Mock corruption rate [0,1]");
  cmd->add_option("--max-retries", opts.max_retries, "Transient-failure retry budget");
  cmd->add_option("--rate-limit", opts.rate_limit, "Requests per second");
  cmd->add_option("--concurrency", opts.concurrency, "Concurrent requests");
}

void add_chunking_options(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--max-chars", opts.max_chars, "Maximum chunk size in characters");
  cmd->add_option("--overlap", opts.overlap, "Chunk overlap in characters");
}

BackendConfig backend_config(const CommonOptions& opts) {
  BackendConfig config;
  config.kind = opts.backend == "http" ? BackendKind::http : BackendKind::mock;
  config.endpoint = opts.endpoint;
  config.max_retries = opts.max_retries;
  config.rate_limit = opts.rate_limit;
  config.seed = opts.seed;
  config.corruption_rate = opts.corruption;
  if (config.kind == BackendKind::http && config.endpoint.empty()) {
    throw ConfigError("http backend requires --endpoint");
  }
  return config;
}

void write_output(const std::string& out_path, const std::vector<std::string>& lines) {
  if (out_path.empty() || out_path == "-") {
    for (const auto& line : lines) std::cout << line << '\n';
    return;
  }
  atomic_write_lines(out_path, lines);
}

std::vector<Chunk> ingest_and_chunk(const std::vector<std::string>& paths,
                                    const CommonOptions& opts, IngestReport& report) {
  auto units = ingest_corpus(paths, report);
  if (units.empty()) throw CorpusError("corpus is empty after ingest");
  std::vector<Chunk> chunks;
  for (const auto& unit : units) {
    auto unit_chunks = chunk_unit(unit, opts.max_chars, opts.overlap);
    chunks.insert(chunks.end(), unit_chunks.begin(), unit_chunks.end());
  }
  return chunks;
}

void report_file_errors(const IngestReport& report) {
  for (const auto& [path, message] : report.file_errors) {
    std::cerr << "warning: " << path << ": " << message << '\n';
  }
}

int cmd_ingest(const std::vector<std::string>& paths, const CommonOptions& opts,
               const std::string& out_path) {
  IngestReport report;
  auto chunks = ingest_and_chunk(paths, opts, report);
  report_file_errors(report);
  std::vector<std::string> lines;
  for (const Chunk& chunk : chunks) {
    ordered_json j;
    j["unit_id"] = chunk.unit_id;
    j["chunk_index"] = chunk.index;
    j["span_start"] = chunk.span_start;
    j["span_end"] = chunk.span_end;
    j["chars"] = chunk.text.size();
    lines.push_back(j.dump());
  }
  write_output(out_path, lines);
  std::cerr << "chunks: " << chunks.size() << '\n';
  return 0;
}

int cmd_generate(const std::vector<std::string>& paths, const CommonOptions& opts,
                 const std::string& out_path) {
  IngestReport report;
  auto chunks = ingest_and_chunk(paths, opts, report);
  report_file_errors(report);

  PromptLibrary prompts = opts.templates.empty() ? PromptLibrary::builtin()
                                                 : PromptLibrary::from_directory(opts.templates);
  auto backend = make_backend(backend_config(opts));
  std::vector<GenerationRequest> requests;
  for (const Chunk& chunk : chunks) {
    GenerationRequest req;
    req.prompt = prompts.generation(chunk, opts.n_questions).text;
    req.model_id = opts.model;
    requests.push_back(std::move(req));
  }
  auto responses = complete_batch(*backend, requests, opts.concurrency);

  std::vector<std::string> lines;
  size_t failures = 0;
  for (size_t i = 0; i < chunks.size(); ++i) {
    if (responses[i].finish_reason == FinishReason::error) {
      std::cerr << "warning: chunk " << chunks[i].unit_id << ":" << chunks[i].index
                << " failed: " << responses[i].error << '\n';
      ++failures;
      continue;
    }
    auto parsed = parse_question_list(responses[i].text, chunks[i].ref());
    for (const Question& q : parsed.items) {
      ordered_json j;
      j["unit_id"] = chunks[i].unit_id;
      j["chunk_index"] = chunks[i].index;
      j["chunk_text"] = chunks[i].text;
      j["ordinal"] = q.ordinal;
      j["question"] = q.text;
      lines.push_back(j.dump());
    }
  }
  write_output(out_path, lines);
  std::cerr << "questions: " << lines.size() << " (chunks failed: " << failures << ")\n";
  return 0;
}

int cmd_answer(const std::string& questions_path, const CommonOptions& opts,
               const std::string& out_path) {
  std::ifstream in(questions_path);
  if (!in) throw ConfigError("cannot open questions file: " + questions_path);

  struct Entry {
    Chunk chunk;
    Question question;
  };
  std::vector<Entry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto j = ordered_json::parse(line);
    Entry entry;
    entry.chunk.unit_id = j.at("unit_id").get<std::string>();
    entry.chunk.index = j.at("chunk_index").get<int>();
    entry.chunk.text = j.at("chunk_text").get<std::string>();
    entry.question = Question{j.at("question").get<std::string>(),
                              j.at("ordinal").get<int>(), entry.chunk.ref()};
    entries.push_back(std::move(entry));
  }

  PromptLibrary prompts = opts.templates.empty() ? PromptLibrary::builtin()
                                                 : PromptLibrary::from_directory(opts.templates);
  auto backend = make_backend(backend_config(opts));
  std::vector<GenerationRequest> requests;
  for (const Entry& entry : entries) {
    GenerationRequest req;
    req.prompt = prompts.answer(entry.chunk, entry.question).text;
    req.model_id = opts.model;
    requests.push_back(std::move(req));
  }
  auto responses = complete_batch(*backend, requests, opts.concurrency);

  std::vector<std::string> lines;
  size_t failures = 0;
  for (size_t i = 0; i < entries.size(); ++i) {
    if (responses[i].finish_reason == FinishReason::error) {
      ++failures;
      continue;
    }
    auto parsed = parse_qa_pair(responses[i].text, entries[i].question);
    for (const QAPair& pair : parsed.items) {
      InstructionSample sample;
      sample.instruction = pair.question.text;
      sample.output = pair.answer.text;
      sample.source_id = pair.knowledge_ref.unit_id;
      sample.chunk_index = pair.knowledge_ref.chunk_index;
      sample.mode = Mode::two_stage;
      sample.model_id = opts.model;
      lines.push_back(sample_to_json(sample));
    }
  }
  write_output(out_path, lines);
  std::cerr << "answers: " << lines.size() << " (failed: " << failures << ")\n";
  return 0;
}

int cmd_filter(const std::string& dataset_path, const std::string& rules_path,
               const std::string& out_path) {
  auto samples = read_dataset(dataset_path);
  std::vector<QAPair> pairs;
  std::string model_id;
  std::string created_at;
  for (const auto& sample : samples) {
    QAPair pair;
    pair.knowledge_ref = KnowledgeRef{sample.source_id, sample.chunk_index};
    pair.question = Question{sample.instruction, 0, pair.knowledge_ref};
    pair.answer = Answer{sample.output, pair.knowledge_ref};
    pair.mode = sample.mode;
    pairs.push_back(std::move(pair));
    model_id = sample.model_id;
    created_at = sample.created_at;
  }
  RuleSet rules = rules_path.empty() ? RuleSet::defaults() : RuleSet::load(rules_path);
  PruneResult pruned = prune_batch(pairs, rules, EmitContext{model_id, created_at});
  std::vector<std::string> lines;
  for (const auto& sample : pruned.kept) lines.push_back(sample_to_json(sample));
  write_output(out_path, lines);
  std::cerr << "kept: " << pruned.kept.size() << " rejected: " << pruned.rejected.size() << '\n';
  return 0;
}

int cmd_stats(const std::string& dataset_path) {
  auto samples = read_dataset(dataset_path);
  std::string report_path = dataset_path + ".report.json";
  std::ifstream in(report_path);
  if (in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    RunReport report = RunReport::from_json(buf.str());  // validate schema
    std::cout << report.to_json();
  } else {
    ordered_json j;
    j["samples_emitted"] = samples.size();
    std::cout << j.dump(2) << '\n';
    std::cerr << "note: no report sidecar at " << report_path << '\n';
  }
  return 0;
}

struct RunOptions {
  CommonOptions common;
  std::string mode = "two-stage";
  std::string out;
  std::string rejected_out;
  bool no_timestamps = false;
  size_t max_chunks = 0;
  bool do_resume = false;
};

int cmd_run(const std::vector<std::string>& paths, const RunOptions& opts) {
  PipelineConfig config;
  config.mode = mode_from_string(opts.mode).value_or(Mode::two_stage);
  config.n_questions = opts.common.n_questions;
  config.chunking = {opts.common.max_chars, opts.common.overlap};
  config.backend = backend_config(opts.common);
  config.model_id = opts.common.model;
  config.concurrency = opts.common.concurrency;
  config.rules_path = opts.common.rules;
  config.templates_dir = opts.common.templates;
  config.output_path = opts.out;
  config.rejected_path = opts.rejected_out;
  config.timestamps = !opts.no_timestamps;
  config.max_chunks = opts.max_chunks;

  RunResult result = opts.do_resume ? resume(config, paths) : run(config, paths);
  if (!result.completed) {
    std::cerr << "stopped after --max-chunks; checkpoint written to "
              << checkpoint_path(config) << '\n';
    return 0;
  }
  std::cerr << "samples: " << result.report.samples_emitted << " -> " << result.dataset_path
            << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Self-questioning instruction-data pipeline"};
  app.require_subcommand(1);
  app.set_config("--config")->configurable(false);

  CommonOptions ingest_opts;
  std::vector<std::string> ingest_paths;
  std::string ingest_out;
  auto* ingest = app.add_subcommand("ingest", "Load a corpus and print the chunk inventory");
  ingest->add_option("paths", ingest_paths, "Corpus files")->required();
  add_chunking_options(ingest, ingest_opts);
  ingest->add_option("--out", ingest_out, "Output file (default: stdout)");

  CommonOptions gen_opts;
  std::vector<std::string> gen_paths;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "Stage 1: generate questions per chunk");
  generate->add_option("paths", gen_paths, "Corpus files")->required();
  add_backend_options(generate, gen_opts);
  add_chunking_options(generate, gen_opts);
  generate->add_option("--n-questions", gen_opts.n_questions, "Questions per chunk");
  generate->add_option("--templates", gen_opts.templates, "Prompt template override directory");
  generate->add_option("--out", gen_out, "Questions file (default: stdout)");

  CommonOptions ans_opts;
  std::string ans_questions;
  std::string ans_out;
  auto* answer = app.add_subcommand("answer", "Stage 2: answer a questions file");
  answer->add_option("--questions", ans_questions, "Questions file from `generate`")->required();
  add_backend_options(answer, ans_opts);
  answer->add_option("--templates", ans_opts.templates, "Prompt template override directory");
  answer->add_option("--out", ans_out, "Answered-pairs file (default: stdout)");

  RunOptions run_opts;
  std::vector<std::string> run_paths;
  auto* run_cmd = app.add_subcommand("run", "Full pipeline: ingest through dataset");
  run_cmd->add_option("paths", run_paths, "Corpus files")->required();
  add_backend_options(run_cmd, run_opts.common);
  add_chunking_options(run_cmd, run_opts.common);
  run_cmd->add_option("--n-questions", run_opts.common.n_questions, "Questions per chunk");
  run_cmd->add_option("--mode", run_opts.mode, "two-stage or single-stage")
      ->check(CLI::IsMember({"two-stage", "two_stage", "single-stage", "single_stage"}));
  run_cmd->add_option("--rules", run_opts.common.rules, "Filter rules file");
  run_cmd->add_option("--templates", run_opts.common.templates,
                      "Prompt template override directory");
  run_cmd->add_option("--out", run_opts.out, "Dataset output path")->required();
  run_cmd->add_option("--rejected-out", run_opts.rejected_out, "Audit file of rejected pairs");
  run_cmd->add_flag("--no-timestamps", run_opts.no_timestamps,
                    "Omit created_at and wall time for reproducible outputs");
  run_cmd->add_option("--max-chunks", run_opts.max_chunks,
                      "Process at most N new chunks, then checkpoint and stop");
  run_cmd->add_flag("--resume", run_opts.do_resume, "Resume from the output's checkpoint");

  std::string filter_dataset;
  std::string filter_rules;
  std::string filter_out;
  auto* filter = app.add_subcommand("filter", "Re-filter an existing dataset");
  filter->add_option("dataset", filter_dataset, "Dataset file (line-delimited JSON)")->required();
  filter->add_option("--rules", filter_rules, "Filter rules file");
  filter->add_option("--out", filter_out, "Filtered dataset (default: stdout)");

  std::string stats_dataset;
  auto* stats = app.add_subcommand("stats", "Print the run report for a dataset");
  stats->add_option("dataset", stats_dataset, "Dataset file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(ingest_paths, ingest_opts, ingest_out);
    if (generate->parsed()) return cmd_generate(gen_paths, gen_opts, gen_out);
    if (answer->parsed()) return cmd_answer(ans_questions, ans_opts, ans_out);
    if (run_cmd->parsed()) return cmd_run(run_paths, run_opts);
    if (filter->parsed()) return cmd_filter(filter_dataset, filter_rules, filter_out);
    if (stats->parsed()) return cmd_stats(stats_dataset);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace selfqa
