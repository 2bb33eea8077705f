#include "selfqa/prompts.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "selfqa/errors.hpp"
#include "selfqa/util.hpp"

namespace selfqa {
namespace {

constexpr const char* kKnowledgeSlot = "unsupervised knowledge data";
constexpr const char* kQuestionSlot = "the generated question";

constexpr const char* kGenerationBody =
    "The background knowledge is:\n"
    "{unsupervised knowledge data}\n"
    "\n"
    "Please generate ten instruction questions as diverse as possible based on the "
    "content of the above article. These questions can be questions about facts or an "
    "understanding and evaluation of relevant content. Please assume that there is no "
    "corresponding article to refer to when asking questions, so do not use "
    "demonstrative pronouns such as \"this\" or \"these\" in the question.\n"
    "\n"
    "Please generate questions in the following format:\n"
    "1. Question: ...\n"
    "2. Question: ...\n";

constexpr const char* kReadingBody =
    "The background knowledge is:\n"
    "{unsupervised knowledge data}\n"
    "Please answer the following question based on the content of the article above:\n"
    "{the generated question}\n"
    "\n"
    "Please answer this question as thoroughly as possible, but do not change the key "
    "information in the original text, and do not include expressions such as \"based "
    "on the above article\" in the answer.\n"
    "\n"
    "Please generate the corresponding answer in the following format:\n"
    "Question: ...\n"
    "Answer: ...\n";

// Single-stage variant: both constraint sets, one model call per chunk.
constexpr const char* kCombinedBody =
    "The background knowledge is:\n"
    "{unsupervised knowledge data}\n"
    "\n"
    "Please generate ten instruction questions as diverse as possible based on the "
    "content of the above article, and answer each question using only that content. "
    "These questions can be questions about facts or an understanding and evaluation "
    "of relevant content. Please assume that there is no corresponding article to "
    "refer to when asking questions, so do not use demonstrative pronouns such as "
    "\"this\" or \"these\" in the question. Please answer each question as thoroughly "
    "as possible, but do not change the key information in the original text, and do "
    "not include expressions such as \"based on the above article\" in the answer.\n"
    "\n"
    "Please generate the questions and answers in the following format:\n"
    "1. Question: ...\n"
    "Answer: ...\n"
    "2. Question: ...\n"
    "Answer: ...\n";

constexpr const char* kCountPhrase = "generate ten instruction questions";

void check_n_questions(int n) {
  if (n < 1 || n > 50) {
    throw ConfigError("n_questions must be between 1 and 50, got " + std::to_string(n));
  }
}

// The templates ask for "ten" questions; any other count is substituted
// in numeric form.
std::string substitute_count(std::string body, int n) {
  if (n == 10) return body;
  size_t pos = body.find(kCountPhrase);
  if (pos == std::string::npos) return body;  // overridden template without the phrase
  body.replace(pos + 9, 3, std::to_string(n));
  return body;
}

std::string render_one(const PromptTemplate& tmpl,
                       const std::string& knowledge,
                       const std::optional<std::string>& question) {
  return render_slots(tmpl.body, [&](std::string_view slot) -> std::optional<std::string> {
    if (slot == kKnowledgeSlot) return knowledge;
    if (question && slot == kQuestionSlot) return *question;
    return std::nullopt;
  });
}

void validate_template(const PromptTemplate& tmpl) {
  for (const auto& slot : tmpl.slots) {
    std::string marker = "{" + slot + "}";
    size_t first = tmpl.body.find(marker);
    if (first == std::string::npos) {
      throw TemplateError("template " + std::string(to_string(tmpl.name)) +
                              " is missing slot '" + slot + "'",
                          slot);
    }
    if (tmpl.body.find(marker, first + 1) != std::string::npos) {
      throw TemplateError("template " + std::string(to_string(tmpl.name)) +
                              " repeats slot '" + slot + "'",
                          slot);
    }
  }
}

}  // namespace

const char* to_string(TemplateName name) {
  switch (name) {
    case TemplateName::instruction_generation: return "instruction_generation";
    case TemplateName::reading_comprehension: return "reading_comprehension";
    case TemplateName::combined: return "combined";
  }
  return "?";
}

PromptLibrary PromptLibrary::builtin() {
  PromptLibrary lib;
  lib.templates_[0] = {TemplateName::instruction_generation, kGenerationBody, {kKnowledgeSlot}};
  lib.templates_[1] = {TemplateName::reading_comprehension,
                       kReadingBody,
                       {kKnowledgeSlot, kQuestionSlot}};
  lib.templates_[2] = {TemplateName::combined, kCombinedBody, {kKnowledgeSlot}};
  for (const auto& tmpl : lib.templates_) validate_template(tmpl);
  return lib;
}

PromptLibrary PromptLibrary::from_directory(const std::string& dir) {
  PromptLibrary lib = builtin();
  for (auto& tmpl : lib.templates_) {
    std::filesystem::path path =
        std::filesystem::path(dir) / (std::string(to_string(tmpl.name)) + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) continue;
    std::ostringstream buf;
    buf << in.rdbuf();
    tmpl.body = buf.str();
    validate_template(tmpl);
  }
  return lib;
}

const PromptTemplate& PromptLibrary::get(TemplateName name) const {
  return templates_[static_cast<size_t>(name)];
}

RenderedPrompt PromptLibrary::generation(const Chunk& knowledge, int n_questions) const {
  check_n_questions(n_questions);
  if (knowledge.text.empty()) throw ConfigError("knowledge chunk is empty");
  PromptTemplate tmpl = get(TemplateName::instruction_generation);
  tmpl.body = substitute_count(tmpl.body, n_questions);
  RenderedPrompt out;
  out.template_name = TemplateName::instruction_generation;
  out.text = render_one(tmpl, knowledge.text, std::nullopt);
  out.knowledge_ref = knowledge.ref();
  return out;
}

RenderedPrompt PromptLibrary::answer(const Chunk& knowledge, const Question& question) const {
  if (question.text.empty()) throw ConfigError("question text is empty");
  RenderedPrompt out;
  out.template_name = TemplateName::reading_comprehension;
  out.text = render_one(get(TemplateName::reading_comprehension), knowledge.text, question.text);
  out.knowledge_ref = knowledge.ref();
  out.question = question;
  return out;
}

RenderedPrompt PromptLibrary::combined(const Chunk& knowledge, int n_questions) const {
  check_n_questions(n_questions);
  if (knowledge.text.empty()) throw ConfigError("knowledge chunk is empty");
  PromptTemplate tmpl = get(TemplateName::combined);
  tmpl.body = substitute_count(tmpl.body, n_questions);
  RenderedPrompt out;
  out.template_name = TemplateName::combined;
  out.text = render_one(tmpl, knowledge.text, std::nullopt);
  out.knowledge_ref = knowledge.ref();
  return out;
}

}  // namespace selfqa
