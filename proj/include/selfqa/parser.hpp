#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "selfqa/types.hpp"

namespace selfqa {

// Closed defect vocabulary; codes land verbatim in the run report.
enum class DefectCode {
  question_drift,
  missing_scaffold,
  truncated_tail,
  orphan_question,
  ordinal_anomaly,
  empty_item,
};

const char* to_string(DefectCode code);

struct Defect {
  int first_line = 0;  // 0-based, inclusive
  int last_line = 0;   // inclusive
  DefectCode code = DefectCode::empty_item;
};

template <typename Item>
struct ParseOutcome {
  std::vector<Item> items;
  // line span of each item, aligned with items (for coverage accounting)
  std::vector<std::pair<int, int>> item_lines;
  std::string residue;  // leading chatter before the first recognized item
  std::vector<Defect> defects;
};

// "1. Question: ..." lists. A line is a continuation of the current item
// unless it matches the item-start pattern; continuations join with a
// single space. Never throws on arbitrary text.
ParseOutcome<Question> parse_question_list(std::string_view completion,
                                           const KnowledgeRef& knowledge_ref);

// "Question: ...\nAnswer: ..." block for one known question. The echoed
// question is advisory; `question` stays authoritative and drift is a
// defect. A bare answer without the scaffold is accepted with
// defect(missing_scaffold).
ParseOutcome<QAPair> parse_qa_pair(std::string_view completion, const Question& question);

// Repeated "N. Question: ...\nAnswer: ..." blocks (single-stage mode).
// When `truncated` is set (finish_reason=length) the final block is
// discarded with defect(truncated_tail).
ParseOutcome<QAPair> parse_combined(std::string_view completion,
                                    const KnowledgeRef& knowledge_ref,
                                    bool truncated = false);

// Scaffold renderers; inverses of the parsers for well-formed content.
std::string render_question_list(const std::vector<Question>& questions);
std::string render_qa_pair(std::string_view question, std::string_view answer);
std::string render_combined(const std::vector<QAPair>& pairs);

}  // namespace selfqa
