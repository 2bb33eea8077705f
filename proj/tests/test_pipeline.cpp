#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>

#include "selfqa/errors.hpp"
#include "selfqa/pipeline.hpp"
#include "test_support.hpp"

using namespace selfqa;
using testsupport::TempDir;
using testsupport::read_file;
using testsupport::write_file;

namespace {

// Small documents, each short enough to stay in one chunk.
std::vector<std::string> write_corpus(TempDir& dir, int docs = 20) {
  std::vector<std::string> paths;
  for (int i = 0; i < docs; ++i) {
    std::string body = "Document " + std::to_string(i) +
                       " describes product line " + std::to_string(i * 7) +
                       ". It lists release dates, owners, and pricing tiers "
                       "for the regional catalog.\n";
    std::string path = dir.file("doc" + std::to_string(i) + ".txt");
    write_file(path, body);
    paths.push_back(path);
  }
  return paths;
}

std::string dxm_jsonl() {
  return R"({"entity": "DXM", "attributes": [["Company", "DXM"], ["Founding Date", "April 28, 2018"], ["Formerly known as", "Baidu Financial"], ["Headquarters Address", "Haidian District, Beijing, China."]]})"
         "\n";
}

PipelineConfig base_config(const std::string& out, Mode mode = Mode::two_stage) {
  PipelineConfig config;
  config.mode = mode;
  config.n_questions = 5;
  config.backend.kind = BackendKind::mock;
  config.backend.seed = 11;
  config.backend.rate_limit = 1e6;
  config.output_path = out;
  config.timestamps = false;
  config.concurrency = 4;
  return config;
}

}  // namespace

TEST_CASE("structured record flows through to an emitted dataset") {
  TempDir dir("pipeline");
  auto jsonl = dir.file("records.jsonl");
  write_file(jsonl, dxm_jsonl());
  auto config = base_config(dir.file("out.jsonl"));
  config.n_questions = 2;
  auto result = run(config, {jsonl});
  CHECK(result.completed);
  CHECK(result.report.units_loaded == 1);
  CHECK(result.report.chunks_produced == 1);
  CHECK(result.report.questions_generated == 2);
  auto samples = read_dataset(config.output_path);
  REQUIRE(samples.size() == result.report.samples_emitted);
  for (const auto& s : samples) {
    CHECK(s.source_id.find("records.jsonl#1") != std::string::npos);
    CHECK(s.chunk_index == 0);
    CHECK(s.mode == Mode::two_stage);
    CHECK(s.created_at.empty());
  }
  // one generation request plus one answer request per accepted question
  CHECK(result.report.requests_issued == 1 + result.report.questions_accepted);
}

TEST_CASE("repeated runs produce byte-identical datasets and reports") {
  TempDir dir("pipeline");
  auto paths = write_corpus(dir);
  auto config_a = base_config(dir.file("a.jsonl"));
  auto config_b = base_config(dir.file("b.jsonl"));
  auto ra = run(config_a, paths);
  auto rb = run(config_b, paths);
  CHECK(ra.completed);
  CHECK(read_file(config_a.output_path) == read_file(config_b.output_path));
  CHECK(ra.report.to_json() == rb.report.to_json());
  CHECK(read_file(config_a.output_path + ".report.json") ==
        read_file(config_b.output_path + ".report.json"));
}

TEST_CASE("single-stage mode issues one request per chunk") {
  TempDir dir("pipeline");
  auto paths = write_corpus(dir, 6);
  auto two = base_config(dir.file("two.jsonl"), Mode::two_stage);
  auto one = base_config(dir.file("one.jsonl"), Mode::single_stage);
  auto rt = run(two, paths);
  auto ro = run(one, paths);
  CHECK(ro.report.requests_issued == 6);
  CHECK(rt.report.requests_issued == 6 + rt.report.questions_accepted);
  for (const auto& s : read_dataset(one.output_path)) CHECK(s.mode == Mode::single_stage);
}

TEST_CASE("pair conservation: every parsed pair is kept or rejected") {
  TempDir dir("pipeline");
  auto paths = write_corpus(dir);
  auto config = base_config(dir.file("out.jsonl"));
  config.rejected_path = dir.file("rejected.jsonl");
  config.backend.corruption_rate = 0.3;
  auto result = run(config, paths);
  size_t rejected_pairs = 0;
  for (const auto& [code, count] : result.report.rejection_histogram) {
    (void)code;
    rejected_pairs += count;
  }
  // question-stage rejections never become parsed pairs, so only answer-stage
  // rejections plus kept samples must add up
  auto samples = read_dataset(config.output_path);
  CHECK(samples.size() == result.report.samples_emitted);
  size_t question_rejections =
      result.report.questions_generated - result.report.questions_accepted;
  CHECK(result.report.samples_emitted + rejected_pairs ==
        result.report.pairs_parsed + question_rejections);
  // rejected file carries one line per rejection
  size_t rejected_lines = 0;
  std::string content = read_file(config.rejected_path);
  for (char c : content) rejected_lines += (c == '\n');
  CHECK(rejected_lines == rejected_pairs);
}

TEST_CASE("answer prompts contain only the source chunk and its own question") {
  TempDir dir("pipeline");
  auto paths = write_corpus(dir, 4);
  auto config = base_config(dir.file("out.jsonl"));
  config.n_questions = 3;
  config.concurrency = 1;

  std::vector<GenerationRequest> seen;
  auto inner = make_backend(config.backend);
  RecordingBackend recorder(*inner, [&](const GenerationRequest& r) { seen.push_back(r); });
  auto result = run(config, paths, recorder);
  CHECK(result.completed);

  IngestReport ingest;
  auto units = ingest_corpus(paths, ingest);
  std::map<std::string, std::string> chunk_texts;
  for (const auto& unit : units) {
    for (const auto& chunk : chunk_unit(unit, config.chunking.max_chars, config.chunking.overlap)) {
      chunk_texts[chunk.unit_id] = chunk.text;
    }
  }

  size_t answer_prompts = 0;
  for (const auto& req : seen) {
    if (req.prompt.find("Please answer the following question") == std::string::npos) continue;
    ++answer_prompts;
    // exactly one source chunk appears in the prompt
    size_t present = 0;
    for (const auto& [unit_id, text] : chunk_texts) {
      if (req.prompt.find(text) != std::string::npos) ++present;
    }
    CHECK(present == 1);
  }
  CHECK(answer_prompts == result.report.questions_accepted);
  CHECK(seen.size() == result.report.requests_issued);
}

TEST_CASE("interrupted run resumes to a byte-identical dataset") {
  TempDir dir("pipeline");
  auto paths = write_corpus(dir, 10);

  auto full = base_config(dir.file("full.jsonl"));
  auto rf = run(full, paths);
  CHECK(rf.completed);

  auto partial = base_config(dir.file("part.jsonl"));
  partial.max_chunks = 5;
  auto rp = run(partial, paths);
  CHECK(!rp.completed);
  CHECK(std::filesystem::exists(checkpoint_path(partial)));
  CHECK(!std::filesystem::exists(partial.output_path));

  partial.max_chunks = 0;
  auto rr = resume(partial, paths);
  CHECK(rr.completed);
  CHECK(!std::filesystem::exists(checkpoint_path(partial)));
  CHECK(read_file(partial.output_path) == read_file(full.output_path));
  CHECK(rr.report.samples_emitted == rf.report.samples_emitted);
  CHECK(rr.report.requests_issued == rf.report.requests_issued);
}

TEST_CASE("resume refuses a checkpoint from a different configuration") {
  TempDir dir("pipeline");
  auto paths = write_corpus(dir, 4);
  auto config = base_config(dir.file("out.jsonl"));
  config.max_chunks = 2;
  auto rp = run(config, paths);
  CHECK(!rp.completed);
  config.n_questions = 7;
  config.max_chunks = 0;
  CHECK_THROWS_AS(resume(config, paths), ConfigError);
}

TEST_CASE("resume without a checkpoint fails") {
  TempDir dir("pipeline");
  auto paths = write_corpus(dir, 2);
  auto config = base_config(dir.file("out.jsonl"));
  CHECK_THROWS_AS(resume(config, paths), ConfigError);
}

TEST_CASE("reports round-trip through json") {
  RunReport report;
  report.units_loaded = 3;
  report.requests_issued = 12;
  report.parse_defect_histogram["truncated_tail"] = 2;
  report.rejection_histogram["R1"] = 4;
  report.prompt_tokens_total = 900;
  auto back = RunReport::from_json(report.to_json());
  CHECK(back.to_json() == report.to_json());
}

TEST_CASE("dataset records round-trip through json lines") {
  InstructionSample sample;
  sample.instruction = "When was DXM founded?";
  sample.output = "DXM was founded on April 28, 2018.";
  sample.source_id = "records.jsonl#1";
  sample.chunk_index = 0;
  sample.mode = Mode::two_stage;
  sample.model_id = "mock-model";
  sample.created_at = "2026-01-01T00:00:00Z";
  auto back = sample_from_json(sample_to_json(sample));
  CHECK(back.instruction == sample.instruction);
  CHECK(back.output == sample.output);
  CHECK(back.source_id == sample.source_id);
  CHECK(back.chunk_index == sample.chunk_index);
  CHECK(back.mode == sample.mode);
  CHECK(back.model_id == sample.model_id);
  CHECK(back.created_at == sample.created_at);
}

TEST_CASE("invalid pipeline configurations are rejected up front") {
  TempDir dir("pipeline");
  auto paths = write_corpus(dir, 1);
  auto config = base_config(dir.file("out.jsonl"));
  SUBCASE("empty output path") {
    config.output_path.clear();
    CHECK_THROWS_AS(run(config, paths), ConfigError);
  }
  SUBCASE("question count out of range") {
    config.n_questions = 0;
    CHECK_THROWS_AS(run(config, paths), ConfigError);
  }
  SUBCASE("overlap not below max_chars") {
    config.chunking.overlap = config.chunking.max_chars;
    CHECK_THROWS_AS(run(config, paths), ConfigError);
  }
  SUBCASE("no corpus paths") {
    CHECK_THROWS_AS(run(config, {}), CorpusError);
  }
}
