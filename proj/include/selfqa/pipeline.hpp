#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "selfqa/corpus.hpp"
#include "selfqa/filter.hpp"
#include "selfqa/gateway.hpp"
#include "selfqa/prompts.hpp"
#include "selfqa/types.hpp"

namespace selfqa {

struct ChunkingConfig {
  size_t max_chars = 2000;
  size_t overlap = 200;
};

struct PipelineConfig {
  Mode mode = Mode::two_stage;
  int n_questions = 10;
  ChunkingConfig chunking;
  BackendConfig backend;
  std::string model_id = "mock-model";
  int concurrency = 4;
  std::string rules_path;      // empty -> built-in defaults
  std::string templates_dir;   // empty -> built-in prompts
  std::string output_path;
  std::string rejected_path;   // empty -> no rejected-pairs file
  bool timestamps = true;
  // Stop after this many newly processed chunks (0 = no limit); the
  // checkpoint is written so the run can be resumed.
  size_t max_chunks = 0;
};

struct RunReport {
  size_t units_loaded = 0;
  size_t chunks_produced = 0;
  size_t requests_issued = 0;
  size_t questions_generated = 0;
  size_t questions_accepted = 0;
  size_t pairs_parsed = 0;
  size_t samples_emitted = 0;
  size_t skipped_chunks = 0;
  std::map<std::string, size_t> parse_defect_histogram;
  std::map<std::string, size_t> rejection_histogram;  // rule code -> count
  long prompt_tokens_total = 0;
  long completion_tokens_total = 0;
  long wall_time_ms = 0;

  std::string to_json() const;
  static RunReport from_json(const std::string& text);
};

struct RunResult {
  RunReport report;
  bool completed = false;  // false when max_chunks stopped the run early
  std::string dataset_path;
};

// Stable hash of everything that shapes the run's outputs; resume refuses
// on mismatch.
uint64_t config_hash(const PipelineConfig& config, const std::vector<std::string>& corpus_paths);

std::string checkpoint_path(const PipelineConfig& config);

// Full pipeline: ingest -> generate -> answer -> parse -> filter -> emit.
// A pre-existing checkpoint from another run is discarded.
RunResult run(const PipelineConfig& config, const std::vector<std::string>& corpus_paths);
RunResult run(const PipelineConfig& config, const std::vector<std::string>& corpus_paths,
              Backend& backend);

// Continue an interrupted run; requires a checkpoint whose config hash
// matches, otherwise throws ConfigError.
RunResult resume(const PipelineConfig& config, const std::vector<std::string>& corpus_paths);
RunResult resume(const PipelineConfig& config, const std::vector<std::string>& corpus_paths,
                 Backend& backend);

// Text files plus line-delimited structured record files (.jsonl/.ndjson).
std::vector<KnowledgeUnit> ingest_corpus(const std::vector<std::string>& paths,
                                         IngestReport& report);

// Dataset record serialization (line-delimited JSON).
std::string sample_to_json(const InstructionSample& sample);
InstructionSample sample_from_json(const std::string& line);
std::vector<InstructionSample> read_dataset(const std::string& path);

// Write lines to path atomically (temp file + rename).
void atomic_write_lines(const std::string& path, const std::vector<std::string>& lines);

}  // namespace selfqa
