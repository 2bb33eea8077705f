#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "selfqa/types.hpp"

namespace selfqa {

enum class UnitKind { unstructured, linearized };

// One cleaned, linearized piece of background knowledge.
struct KnowledgeUnit {
  std::string id;
  std::string source;
  UnitKind kind = UnitKind::unstructured;
  std::string text;
  std::map<std::string, std::string> metadata;
};

struct StructuredRecord {
  std::string entity;
  std::vector<std::pair<std::string, std::string>> attributes;
};

struct Chunk {
  std::string unit_id;
  int index = 0;
  std::string text;
  size_t span_start = 0;
  size_t span_end = 0;

  KnowledgeRef ref() const { return KnowledgeRef{unit_id, index}; }
};

struct CleaningConfig {
  bool collapse_spaces = true;
  bool strip_controls = true;
};

struct IngestReport {
  size_t dropped_empty = 0;
  size_t lossy_decodes = 0;
  std::vector<std::pair<std::string, std::string>> file_errors;  // (path, message)
};

// Whitespace normalization: CRLF/CR -> LF, runs of spaces/tabs -> one space,
// control characters stripped, line-end and document-end whitespace trimmed.
// Invalid UTF-8 bytes are replaced with U+FFFD and counted.
std::string clean_text(std::string_view raw, const CleaningConfig& cfg,
                       size_t* utf8_replacements = nullptr);

// One KnowledgeUnit per readable, non-empty file. Unreadable files are
// recorded in the report; the call only throws CorpusError when every
// path failed.
std::vector<KnowledgeUnit> load_text_corpus(const std::vector<std::string>& paths,
                                            const CleaningConfig& cfg,
                                            IngestReport& report);

// Render a structured record as flat text. Without a template the
// attribute pairs become "Name: Value" joined by single spaces; a template
// substitutes {entity} and {attribute-name} slots. kind=linearized.
KnowledgeUnit linearize_record(const StructuredRecord& record,
                               const std::optional<std::string>& tmpl = std::nullopt);

// Line-delimited structured input: each line {"entity": ..., "attributes":
// [[name, value], ...]}. Unit ids are "<path>#<line>".
std::vector<KnowledgeUnit> load_structured_corpus(const std::string& path,
                                                  const std::optional<std::string>& tmpl,
                                                  IngestReport& report);

// Split a unit into chunks of at most max_chars characters; consecutive
// chunks overlap by exactly `overlap` characters. Split points prefer
// paragraph, then sentence, then whitespace boundaries, then a hard cut.
std::vector<Chunk> chunk_unit(const KnowledgeUnit& unit, size_t max_chars, size_t overlap);

}  // namespace selfqa
