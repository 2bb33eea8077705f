#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace selfqa {

// Provenance pointer from any generated item back to the knowledge chunk
// whose text was in the prompt.
struct KnowledgeRef {
  std::string unit_id;
  int chunk_index = 0;

  friend bool operator==(const KnowledgeRef&, const KnowledgeRef&) = default;
};

enum class Mode { two_stage, single_stage };

const char* to_string(Mode mode);
std::optional<Mode> mode_from_string(std::string_view s);

struct Question {
  std::string text;
  int ordinal = 0;
  KnowledgeRef knowledge_ref;
};

struct Answer {
  std::string text;
  KnowledgeRef knowledge_ref;
};

struct QAPair {
  Question question;
  Answer answer;
  KnowledgeRef knowledge_ref;
  Mode mode = Mode::two_stage;
};

// One kept (instruction, output) record, the unit of the emitted dataset.
struct InstructionSample {
  std::string instruction;
  std::string output;
  std::string source_id;
  int chunk_index = 0;
  Mode mode = Mode::two_stage;
  std::string model_id;
  std::string created_at;  // empty when timestamping is disabled
};

}  // namespace selfqa
