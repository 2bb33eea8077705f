#include "selfqa/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "selfqa/errors.hpp"
#include "selfqa/parser.hpp"
#include "selfqa/util.hpp"

namespace selfqa {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string chunk_id(const Chunk& chunk) {
  return chunk.unit_id + ":" + std::to_string(chunk.index);
}

std::string iso8601_utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Everything recorded for one finished chunk; the checkpoint stores these
// so resumed runs reproduce the uninterrupted outcome.
struct ChunkOutcome {
  std::string id;
  size_t requests = 0;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  bool skipped = false;
  std::map<std::string, size_t> defects;
  size_t questions_generated = 0;
  std::vector<std::pair<Question, std::string>> rejected_questions;  // (question, rule)
  std::vector<QAPair> pairs;
};

ordered_json outcome_to_json(const ChunkOutcome& outcome) {
  ordered_json j;
  j["id"] = outcome.id;
  j["requests"] = outcome.requests;
  j["prompt_tokens"] = outcome.prompt_tokens;
  j["completion_tokens"] = outcome.completion_tokens;
  j["skipped"] = outcome.skipped;
  j["defects"] = outcome.defects;
  j["questions_generated"] = outcome.questions_generated;
  j["rejected_questions"] = ordered_json::array();
  for (const auto& [q, rule] : outcome.rejected_questions) {
    j["rejected_questions"].push_back({{"text", q.text}, {"ordinal", q.ordinal}, {"rule", rule}});
  }
  j["pairs"] = ordered_json::array();
  for (const QAPair& pair : outcome.pairs) {
    j["pairs"].push_back({{"question", pair.question.text},
                          {"ordinal", pair.question.ordinal},
                          {"answer", pair.answer.text},
                          {"mode", to_string(pair.mode)}});
  }
  return j;
}

ChunkOutcome outcome_from_json(const ordered_json& j, const KnowledgeRef& ref) {
  ChunkOutcome outcome;
  outcome.id = j.at("id").get<std::string>();
  outcome.requests = j.at("requests").get<size_t>();
  outcome.prompt_tokens = j.at("prompt_tokens").get<long>();
  outcome.completion_tokens = j.at("completion_tokens").get<long>();
  outcome.skipped = j.value("skipped", false);
  outcome.defects = j.at("defects").get<std::map<std::string, size_t>>();
  outcome.questions_generated = j.at("questions_generated").get<size_t>();
  for (const auto& rq : j.at("rejected_questions")) {
    Question q{rq.at("text").get<std::string>(), rq.at("ordinal").get<int>(), ref};
    outcome.rejected_questions.emplace_back(std::move(q), rq.at("rule").get<std::string>());
  }
  for (const auto& pj : j.at("pairs")) {
    QAPair pair;
    pair.question = Question{pj.at("question").get<std::string>(),
                             pj.at("ordinal").get<int>(), ref};
    pair.answer = Answer{pj.at("answer").get<std::string>(), ref};
    pair.knowledge_ref = ref;
    pair.mode = mode_from_string(pj.at("mode").get<std::string>()).value_or(Mode::two_stage);
    outcome.pairs.push_back(std::move(pair));
  }
  return outcome;
}

void accumulate_defects(ChunkOutcome& outcome, const std::vector<Defect>& defects) {
  for (const Defect& d : defects) ++outcome.defects[to_string(d.code)];
}

GenerationRequest make_request(const PipelineConfig& config, const RenderedPrompt& prompt,
                               const std::string& tag) {
  GenerationRequest req;
  req.prompt = prompt.text;
  req.model_id = config.model_id;
  req.request_tag = tag;
  return req;
}

}  // namespace

std::string RunReport::to_json() const {
  ordered_json j;
  j["units_loaded"] = units_loaded;
  j["chunks_produced"] = chunks_produced;
  j["requests_issued"] = requests_issued;
  j["questions_generated"] = questions_generated;
  j["questions_accepted"] = questions_accepted;
  j["pairs_parsed"] = pairs_parsed;
  j["samples_emitted"] = samples_emitted;
  j["skipped_chunks"] = skipped_chunks;
  j["parse_defect_histogram"] = parse_defect_histogram;
  j["rejection_histogram"] = rejection_histogram;
  j["prompt_tokens_total"] = prompt_tokens_total;
  j["completion_tokens_total"] = completion_tokens_total;
  j["wall_time_ms"] = wall_time_ms;
  return j.dump(2) + "\n";
}

RunReport RunReport::from_json(const std::string& text) {
  auto j = ordered_json::parse(text);
  RunReport r;
  r.units_loaded = j.at("units_loaded").get<size_t>();
  r.chunks_produced = j.at("chunks_produced").get<size_t>();
  r.requests_issued = j.at("requests_issued").get<size_t>();
  r.questions_generated = j.at("questions_generated").get<size_t>();
  r.questions_accepted = j.at("questions_accepted").get<size_t>();
  r.pairs_parsed = j.at("pairs_parsed").get<size_t>();
  r.samples_emitted = j.at("samples_emitted").get<size_t>();
  r.skipped_chunks = j.at("skipped_chunks").get<size_t>();
  r.parse_defect_histogram = j.at("parse_defect_histogram").get<std::map<std::string, size_t>>();
  r.rejection_histogram = j.at("rejection_histogram").get<std::map<std::string, size_t>>();
  r.prompt_tokens_total = j.at("prompt_tokens_total").get<long>();
  r.completion_tokens_total = j.at("completion_tokens_total").get<long>();
  r.wall_time_ms = j.at("wall_time_ms").get<long>();
  return r;
}

uint64_t config_hash(const PipelineConfig& config, const std::vector<std::string>& corpus_paths) {
  std::ostringstream canon;
  canon << to_string(config.mode) << '|' << config.n_questions << '|'
        << config.chunking.max_chars << '|' << config.chunking.overlap << '|'
        << (config.backend.kind == BackendKind::mock ? "mock" : "http") << '|'
        << config.backend.seed << '|' << config.backend.corruption_rate << '|'
        << config.model_id << '|' << config.rules_path << '|' << config.templates_dir;
  for (const auto& path : corpus_paths) canon << '|' << path;
  return fnv1a64(canon.str());
}

std::string checkpoint_path(const PipelineConfig& config) {
  return config.output_path + ".ckpt";
}

std::vector<KnowledgeUnit> ingest_corpus(const std::vector<std::string>& paths,
                                         IngestReport& report) {
  std::vector<std::string> text_paths;
  std::vector<KnowledgeUnit> units;
  for (const auto& path : paths) {
    auto ext = std::filesystem::path(path).extension().string();
    if (ext == ".jsonl" || ext == ".ndjson") {
      auto structured = load_structured_corpus(path, std::nullopt, report);
      units.insert(units.end(), structured.begin(), structured.end());
    } else {
      text_paths.push_back(path);
    }
  }
  if (!text_paths.empty()) {
    CleaningConfig cleaning;
    auto text_units = load_text_corpus(text_paths, cleaning, report);
    units.insert(units.end(), text_units.begin(), text_units.end());
  }
  return units;
}

std::string sample_to_json(const InstructionSample& sample) {
  ordered_json j;
  j["instruction"] = sample.instruction;
  j["output"] = sample.output;
  j["source_id"] = sample.source_id;
  j["chunk_index"] = sample.chunk_index;
  j["mode"] = to_string(sample.mode);
  j["model_id"] = sample.model_id;
  if (!sample.created_at.empty()) j["created_at"] = sample.created_at;
  return j.dump();
}

InstructionSample sample_from_json(const std::string& line) {
  auto j = ordered_json::parse(line);
  InstructionSample sample;
  sample.instruction = j.at("instruction").get<std::string>();
  sample.output = j.at("output").get<std::string>();
  sample.source_id = j.at("source_id").get<std::string>();
  sample.chunk_index = j.at("chunk_index").get<int>();
  sample.mode = mode_from_string(j.value("mode", "two_stage")).value_or(Mode::two_stage);
  sample.model_id = j.value("model_id", "");
  sample.created_at = j.value("created_at", "");
  return sample;
}

std::vector<InstructionSample> read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset: " + path);
  std::vector<InstructionSample> samples;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    samples.push_back(sample_from_json(line));
  }
  return samples;
}

void atomic_write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("output path unwritable: " + path);
    for (const auto& line : lines) out << line << '\n';
    out.flush();
    if (!out) throw ConfigError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

namespace {

class PipelineRun {
 public:
  PipelineRun(const PipelineConfig& config, const std::vector<std::string>& corpus_paths,
              Backend& backend)
      : config_(config), corpus_paths_(corpus_paths), backend_(backend) {}

  RunResult execute(bool resuming) {
    auto started = std::chrono::steady_clock::now();
    validate();
    probe_output();

    IngestReport ingest_report;
    auto units = ingest_corpus(corpus_paths_, ingest_report);
    if (units.empty()) throw CorpusError("corpus is empty after ingest");

    std::vector<Chunk> chunks;
    for (const auto& unit : units) {
      auto unit_chunks = chunk_unit(unit, config_.chunking.max_chars, config_.chunking.overlap);
      chunks.insert(chunks.end(), unit_chunks.begin(), unit_chunks.end());
    }

    uint64_t hash = config_hash(config_, corpus_paths_);
    std::map<std::string, ChunkOutcome> done;
    std::string ckpt = checkpoint_path(config_);
    if (resuming) {
      load_checkpoint(ckpt, hash, chunks, done);
    } else if (std::filesystem::exists(ckpt)) {
      std::filesystem::remove(ckpt);
    }

    std::vector<const Chunk*> pending;
    for (const Chunk& chunk : chunks) {
      if (!done.count(chunk_id(chunk))) pending.push_back(&chunk);
    }
    if (config_.max_chunks > 0 && pending.size() > config_.max_chunks) {
      pending.resize(config_.max_chunks);
    }

    PromptLibrary prompts = config_.templates_dir.empty()
                                ? PromptLibrary::builtin()
                                : PromptLibrary::from_directory(config_.templates_dir);
    RuleSet rules = config_.rules_path.empty() ? RuleSet::defaults()
                                               : RuleSet::load(config_.rules_path);

    std::vector<ChunkOutcome> fresh = config_.mode == Mode::two_stage
                                          ? run_two_stage(pending, prompts, rules)
                                          : run_single_stage(pending, prompts);
    for (auto& outcome : fresh) done[outcome.id] = std::move(outcome);

    bool complete = true;
    for (const Chunk& chunk : chunks) {
      if (!done.count(chunk_id(chunk))) complete = false;
    }

    RunResult result;
    result.report.units_loaded = units.size();
    result.report.chunks_produced = chunks.size();

    if (!complete) {
      write_checkpoint(ckpt, hash, chunks, done);
      for (const Chunk& chunk : chunks) {
        auto it = done.find(chunk_id(chunk));
        if (it != done.end()) fold_counters(result.report, it->second);
      }
      result.completed = false;
      return result;
    }

    // Assemble in corpus order so output ordering is deterministic.
    std::vector<QAPair> pairs;
    std::vector<std::pair<QAPair, std::string>> question_rejections;
    for (const Chunk& chunk : chunks) {
      const ChunkOutcome& outcome = done.at(chunk_id(chunk));
      fold_counters(result.report, outcome);
      for (const auto& [question, rule] : outcome.rejected_questions) {
        QAPair rejected;
        rejected.question = question;
        rejected.answer = Answer{"", question.knowledge_ref};
        rejected.knowledge_ref = question.knowledge_ref;
        rejected.mode = config_.mode;
        question_rejections.emplace_back(std::move(rejected), rule);
        ++result.report.rejection_histogram[rule];
      }
      pairs.insert(pairs.end(), outcome.pairs.begin(), outcome.pairs.end());
    }
    result.report.pairs_parsed = pairs.size();

    EmitContext ctx{config_.model_id, config_.timestamps ? iso8601_utc_now() : ""};
    PruneResult pruned = prune_batch(pairs, rules, ctx);
    for (const auto& [pair, rule] : pruned.rejected) {
      (void)pair;
      ++result.report.rejection_histogram[rule];
    }
    result.report.samples_emitted = pruned.kept.size();

    std::vector<std::string> lines;
    lines.reserve(pruned.kept.size());
    for (const auto& sample : pruned.kept) lines.push_back(sample_to_json(sample));
    atomic_write_lines(config_.output_path, lines);
    result.dataset_path = config_.output_path;

    if (!config_.rejected_path.empty()) {
      std::vector<std::string> rejected_lines;
      auto emit_rejected = [&](const QAPair& pair, const std::string& rule) {
        InstructionSample sample;
        sample.instruction = pair.question.text;
        sample.output = pair.answer.text;
        sample.source_id = pair.knowledge_ref.unit_id;
        sample.chunk_index = pair.knowledge_ref.chunk_index;
        sample.mode = pair.mode;
        sample.model_id = config_.model_id;
        auto j = ordered_json::parse(sample_to_json(sample));
        j["rule_code"] = rule;
        rejected_lines.push_back(j.dump());
      };
      for (const auto& [pair, rule] : question_rejections) emit_rejected(pair, rule);
      for (const auto& [pair, rule] : pruned.rejected) emit_rejected(pair, rule);
      atomic_write_lines(config_.rejected_path, rejected_lines);
    }

    if (config_.timestamps) {
      result.report.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                       std::chrono::steady_clock::now() - started)
                                       .count();
    }
    std::string report_json = result.report.to_json();
    if (!report_json.empty() && report_json.back() == '\n') report_json.pop_back();
    atomic_write_lines(config_.output_path + ".report.json", {report_json});
    if (std::filesystem::exists(ckpt)) std::filesystem::remove(ckpt);
    result.completed = true;
    return result;
  }

 private:
  void validate() const {
    if (config_.output_path.empty()) throw ConfigError("output path is required");
    if (config_.n_questions < 1 || config_.n_questions > 50) {
      throw ConfigError("n_questions must be between 1 and 50");
    }
    if (config_.concurrency < 1) throw ConfigError("concurrency must be >= 1");
  }

  void probe_output() const {
    std::ofstream probe(config_.output_path + ".tmp", std::ios::app);
    if (!probe) throw ConfigError("output path unwritable: " + config_.output_path);
    probe.close();
    std::filesystem::remove(config_.output_path + ".tmp");
  }

  void fold_counters(RunReport& report, const ChunkOutcome& outcome) const {
    report.requests_issued += outcome.requests;
    report.prompt_tokens_total += outcome.prompt_tokens;
    report.completion_tokens_total += outcome.completion_tokens;
    report.questions_generated += outcome.questions_generated;
    report.questions_accepted +=
        outcome.questions_generated > outcome.rejected_questions.size()
            ? outcome.questions_generated - outcome.rejected_questions.size()
            : 0;
    if (outcome.skipped) ++report.skipped_chunks;
    for (const auto& [code, count] : outcome.defects) {
      report.parse_defect_histogram[code] += count;
    }
  }

  void record_usage(ChunkOutcome& outcome, const GenerationResponse& response) const {
    ++outcome.requests;
    outcome.prompt_tokens += response.prompt_tokens;
    outcome.completion_tokens += response.completion_tokens;
  }

  std::vector<ChunkOutcome> run_two_stage(const std::vector<const Chunk*>& pending,
                                          const PromptLibrary& prompts,
                                          const RuleSet& rules) {
    std::vector<GenerationRequest> gen_requests;
    gen_requests.reserve(pending.size());
    for (const Chunk* chunk : pending) {
      gen_requests.push_back(make_request(
          config_, prompts.generation(*chunk, config_.n_questions), chunk_id(*chunk)));
    }
    auto gen_responses = complete_batch(backend_, gen_requests, config_.concurrency);

    std::vector<ChunkOutcome> outcomes(pending.size());
    // (outcome index, question) for every accepted question, in order
    std::vector<std::pair<size_t, Question>> accepted;
    for (size_t i = 0; i < pending.size(); ++i) {
      ChunkOutcome& outcome = outcomes[i];
      outcome.id = chunk_id(*pending[i]);
      record_usage(outcome, gen_responses[i]);
      if (gen_responses[i].finish_reason == FinishReason::error) {
        outcome.skipped = true;
        continue;
      }
      auto parsed = parse_question_list(gen_responses[i].text, pending[i]->ref());
      accumulate_defects(outcome, parsed.defects);
      outcome.questions_generated = parsed.items.size();
      for (const Question& question : parsed.items) {
        // Filter before spending an answer request; attribution unchanged.
        FilterVerdict verdict = check_question(question, rules);
        if (verdict.accept) {
          accepted.emplace_back(i, question);
        } else {
          outcome.rejected_questions.emplace_back(question, verdict.rule_code);
        }
      }
    }

    std::vector<GenerationRequest> answer_requests;
    answer_requests.reserve(accepted.size());
    for (const auto& [idx, question] : accepted) {
      answer_requests.push_back(make_request(
          config_, prompts.answer(*pending[idx], question),
          outcomes[idx].id + "#q" + std::to_string(question.ordinal)));
    }
    auto answer_responses = complete_batch(backend_, answer_requests, config_.concurrency);

    for (size_t k = 0; k < accepted.size(); ++k) {
      const auto& [idx, question] = accepted[k];
      ChunkOutcome& outcome = outcomes[idx];
      record_usage(outcome, answer_responses[k]);
      if (answer_responses[k].finish_reason == FinishReason::error) {
        ++outcome.defects["answer_request_failed"];
        continue;
      }
      auto parsed = parse_qa_pair(answer_responses[k].text, question);
      accumulate_defects(outcome, parsed.defects);
      for (QAPair& pair : parsed.items) outcome.pairs.push_back(std::move(pair));
    }
    return outcomes;
  }

  std::vector<ChunkOutcome> run_single_stage(const std::vector<const Chunk*>& pending,
                                             const PromptLibrary& prompts) {
    std::vector<GenerationRequest> requests;
    requests.reserve(pending.size());
    for (const Chunk* chunk : pending) {
      requests.push_back(make_request(
          config_, prompts.combined(*chunk, config_.n_questions), chunk_id(*chunk)));
    }
    auto responses = complete_batch(backend_, requests, config_.concurrency);

    std::vector<ChunkOutcome> outcomes(pending.size());
    for (size_t i = 0; i < pending.size(); ++i) {
      ChunkOutcome& outcome = outcomes[i];
      outcome.id = chunk_id(*pending[i]);
      record_usage(outcome, responses[i]);
      if (responses[i].finish_reason == FinishReason::error) {
        outcome.skipped = true;
        continue;
      }
      auto parsed = parse_combined(responses[i].text, pending[i]->ref(),
                                   responses[i].finish_reason == FinishReason::length);
      accumulate_defects(outcome, parsed.defects);
      outcome.questions_generated = parsed.items.size();
      outcome.pairs = std::move(parsed.items);
    }
    return outcomes;
  }

  void load_checkpoint(const std::string& path, uint64_t hash,
                       const std::vector<Chunk>& chunks,
                       std::map<std::string, ChunkOutcome>& done) const {
    std::ifstream in(path);
    if (!in) throw ConfigError("no checkpoint to resume from: " + path);
    ordered_json j;
    try {
      j = ordered_json::parse(in);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("checkpoint unreadable: ") + e.what());
    }
    if (j.at("config_hash").get<std::string>() != to_hex(hash, 16)) {
      throw ConfigError("checkpoint belongs to a different configuration; refusing to resume");
    }
    std::map<std::string, KnowledgeRef> refs;
    for (const Chunk& chunk : chunks) refs[chunk_id(chunk)] = chunk.ref();
    for (const auto& cj : j.at("chunks")) {
      std::string id = cj.at("id").get<std::string>();
      auto it = refs.find(id);
      if (it == refs.end()) continue;  // chunk no longer exists; re-request
      done[id] = outcome_from_json(cj, it->second);
    }
  }

  void write_checkpoint(const std::string& path, uint64_t hash,
                        const std::vector<Chunk>& chunks,
                        const std::map<std::string, ChunkOutcome>& done) const {
    ordered_json j;
    j["config_hash"] = to_hex(hash, 16);
    j["chunks"] = ordered_json::array();
    for (const Chunk& chunk : chunks) {
      auto it = done.find(chunk_id(chunk));
      if (it != done.end()) j["chunks"].push_back(outcome_to_json(it->second));
    }
    atomic_write_lines(path, {j.dump()});
  }

  const PipelineConfig& config_;
  const std::vector<std::string>& corpus_paths_;
  Backend& backend_;
};

}  // namespace

RunResult run(const PipelineConfig& config, const std::vector<std::string>& corpus_paths,
              Backend& backend) {
  return PipelineRun(config, corpus_paths, backend).execute(false);
}

RunResult run(const PipelineConfig& config, const std::vector<std::string>& corpus_paths) {
  auto backend = make_backend(config.backend);
  return run(config, corpus_paths, *backend);
}

RunResult resume(const PipelineConfig& config, const std::vector<std::string>& corpus_paths,
                 Backend& backend) {
  return PipelineRun(config, corpus_paths, backend).execute(true);
}

RunResult resume(const PipelineConfig& config, const std::vector<std::string>& corpus_paths) {
  auto backend = make_backend(config.backend);
  return resume(config, corpus_paths, *backend);
}

}  // namespace selfqa
