#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "selfqa/corpus.hpp"
#include "selfqa/types.hpp"

namespace selfqa {

enum class TemplateName { instruction_generation, reading_comprehension, combined };

const char* to_string(TemplateName name);

struct PromptTemplate {
  TemplateName name = TemplateName::instruction_generation;
  std::string body;
  std::vector<std::string> slots;  // each must appear exactly once in body
};

struct RenderedPrompt {
  TemplateName template_name = TemplateName::instruction_generation;
  std::string text;
  KnowledgeRef knowledge_ref;
  std::optional<Question> question;  // present iff reading_comprehension
};

// Holds the three prompt templates. Defaults are the built-in verbatim
// texts; from_directory overrides any template whose file
// (<template_name>.txt) exists and falls back to the built-in otherwise.
class PromptLibrary {
 public:
  static PromptLibrary builtin();
  static PromptLibrary from_directory(const std::string& dir);

  const PromptTemplate& get(TemplateName name) const;

  RenderedPrompt generation(const Chunk& knowledge, int n_questions) const;
  RenderedPrompt answer(const Chunk& knowledge, const Question& question) const;
  RenderedPrompt combined(const Chunk& knowledge, int n_questions) const;

 private:
  std::array<PromptTemplate, 3> templates_;
};

}  // namespace selfqa
