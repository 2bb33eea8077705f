#include "selfqa/parser.hpp"

#include <cctype>

#include "selfqa/util.hpp"

namespace selfqa {
namespace {

bool ieq_keyword(std::string_view text, size_t pos, std::string_view keyword) {
  if (pos + keyword.size() > text.size()) return false;
  for (size_t i = 0; i < keyword.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[pos + i])) != keyword[i]) return false;
  }
  return true;
}

size_t skip_ws(std::string_view line, size_t pos) {
  while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
  return pos;
}

struct ItemStart {
  int ordinal = 0;
  std::string_view rest;
};

// "<ws><int>.<ws>question:<ws><rest>", keyword case-insensitive.
std::optional<ItemStart> match_item_start(std::string_view line) {
  size_t pos = skip_ws(line, 0);
  size_t digits = pos;
  while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
  if (digits == pos || digits >= line.size() || line[digits] != '.') return std::nullopt;
  int ordinal = 0;
  for (size_t i = pos; i < digits; ++i) ordinal = ordinal * 10 + (line[i] - '0');
  size_t kw = skip_ws(line, digits + 1);
  if (!ieq_keyword(line, kw, "question:")) return std::nullopt;
  return ItemStart{ordinal, line.substr(skip_ws(line, kw + 9))};
}

// "<ws>question:<rest>" with no numbering (echo line of the QA scaffold).
std::optional<std::string_view> match_question_line(std::string_view line) {
  size_t pos = skip_ws(line, 0);
  if (auto item = match_item_start(line)) return item->rest;
  if (!ieq_keyword(line, pos, "question:")) return std::nullopt;
  return line.substr(skip_ws(line, pos + 9));
}

std::optional<std::string_view> match_answer_line(std::string_view line) {
  size_t pos = skip_ws(line, 0);
  if (!ieq_keyword(line, pos, "answer:")) return std::nullopt;
  return line.substr(skip_ws(line, pos + 7));
}

// Continuations join with a single space; blank lines add nothing.
void append_segment(std::string& text, std::string_view segment) {
  std::string_view t = trim(segment);
  if (t.empty()) return;
  if (!text.empty()) text.push_back(' ');
  text.append(t);
}

}  // namespace

const char* to_string(DefectCode code) {
  switch (code) {
    case DefectCode::question_drift: return "question_drift";
    case DefectCode::missing_scaffold: return "missing_scaffold";
    case DefectCode::truncated_tail: return "truncated_tail";
    case DefectCode::orphan_question: return "orphan_question";
    case DefectCode::ordinal_anomaly: return "ordinal_anomaly";
    case DefectCode::empty_item: return "empty_item";
  }
  return "?";
}

ParseOutcome<Question> parse_question_list(std::string_view completion,
                                           const KnowledgeRef& knowledge_ref) {
  ParseOutcome<Question> out;
  auto lines = split_lines(completion);

  bool have_item = false;
  Question current;
  int first_line = 0;
  int last_ordinal = 0;
  std::vector<std::string_view> residue_lines;

  auto flush = [&](int end_line) {
    if (!have_item) return;
    if (current.text.empty()) {
      out.defects.push_back({first_line, end_line, DefectCode::empty_item});
    } else {
      out.items.push_back(current);
      out.item_lines.emplace_back(first_line, end_line);
    }
    have_item = false;
  };

  for (int i = 0; i < static_cast<int>(lines.size()); ++i) {
    if (auto item = match_item_start(lines[i])) {
      flush(i - 1);
      have_item = true;
      current = Question{std::string(), item->ordinal, knowledge_ref};
      append_segment(current.text, item->rest);
      first_line = i;
      if (item->ordinal <= last_ordinal) {
        out.defects.push_back({i, i, DefectCode::ordinal_anomaly});
      }
      last_ordinal = item->ordinal;
      continue;
    }
    if (have_item) {
      append_segment(current.text, lines[i]);
    } else {
      residue_lines.push_back(lines[i]);
    }
  }
  flush(static_cast<int>(lines.size()) - 1);

  std::string residue;
  for (size_t i = 0; i < residue_lines.size(); ++i) {
    if (i) residue.push_back('\n');
    residue.append(residue_lines[i]);
  }
  out.residue = std::move(residue);
  return out;
}

ParseOutcome<QAPair> parse_qa_pair(std::string_view completion, const Question& question) {
  ParseOutcome<QAPair> out;
  auto lines = split_lines(completion);
  int n = static_cast<int>(lines.size());

  int question_line = -1;
  int answer_line = -1;
  for (int i = 0; i < n; ++i) {
    if (question_line < 0 && match_question_line(lines[i])) question_line = i;
    if (match_answer_line(lines[i])) {
      answer_line = i;
      break;
    }
  }
  if (question_line >= 0 && answer_line >= 0 && question_line > answer_line) question_line = -1;

  std::string answer_text;
  if (answer_line >= 0) {
    append_segment(answer_text, *match_answer_line(lines[answer_line]));
    for (int i = answer_line + 1; i < n; ++i) append_segment(answer_text, lines[i]);
    if (question_line < 0) {
      out.defects.push_back({0, answer_line, DefectCode::missing_scaffold});
    } else {
      std::string echo;
      append_segment(echo, *match_question_line(lines[question_line]));
      for (int i = question_line + 1; i < answer_line; ++i) append_segment(echo, lines[i]);
      if (normalize_compare(echo) != normalize_compare(question.text)) {
        out.defects.push_back({question_line, answer_line - 1, DefectCode::question_drift});
      }
      for (int i = 0; i < question_line; ++i) {
        if (i) out.residue.push_back('\n');
        out.residue.append(lines[i]);
      }
    }
  } else if (question_line >= 0) {
    out.defects.push_back({question_line, n - 1, DefectCode::orphan_question});
    return out;
  } else {
    // No scaffold at all: the whole completion is the answer.
    for (auto line : lines) append_segment(answer_text, line);
    if (answer_text.empty()) return out;
    out.defects.push_back({0, n - 1, DefectCode::missing_scaffold});
  }

  if (answer_text.empty()) {
    out.defects.push_back({answer_line, n - 1, DefectCode::empty_item});
    return out;
  }
  QAPair pair;
  pair.question = question;
  pair.answer = Answer{std::move(answer_text), question.knowledge_ref};
  pair.knowledge_ref = question.knowledge_ref;
  pair.mode = Mode::two_stage;
  out.items.push_back(std::move(pair));
  out.item_lines.emplace_back(0, n - 1);
  return out;
}

ParseOutcome<QAPair> parse_combined(std::string_view completion,
                                    const KnowledgeRef& knowledge_ref,
                                    bool truncated) {
  ParseOutcome<QAPair> out;
  auto lines = split_lines(completion);
  int n = static_cast<int>(lines.size());

  struct Block {
    int ordinal = 0;
    std::string question;
    std::string answer;
    bool has_answer = false;
    int first_line = 0;
    int last_line = 0;
  };
  std::vector<Block> blocks;
  std::vector<std::string_view> residue_lines;
  int last_ordinal = 0;

  for (int i = 0; i < n; ++i) {
    if (auto item = match_item_start(lines[i])) {
      if (!blocks.empty()) blocks.back().last_line = i - 1;
      Block block;
      block.ordinal = item->ordinal;
      block.first_line = i;
      block.last_line = i;
      append_segment(block.question, item->rest);
      blocks.push_back(std::move(block));
      if (item->ordinal <= last_ordinal) {
        out.defects.push_back({i, i, DefectCode::ordinal_anomaly});
      }
      last_ordinal = item->ordinal;
      continue;
    }
    if (blocks.empty()) {
      residue_lines.push_back(lines[i]);
      continue;
    }
    Block& block = blocks.back();
    if (auto answer = match_answer_line(lines[i])) {
      block.has_answer = true;
      append_segment(block.answer, *answer);
    } else if (block.has_answer) {
      append_segment(block.answer, lines[i]);
    } else {
      append_segment(block.question, lines[i]);
    }
  }
  if (!blocks.empty()) blocks.back().last_line = n - 1;

  if (truncated && !blocks.empty()) {
    const Block& tail = blocks.back();
    out.defects.push_back({tail.first_line, tail.last_line, DefectCode::truncated_tail});
    blocks.pop_back();
  }

  for (const Block& block : blocks) {
    if (block.question.empty() && block.answer.empty()) {
      out.defects.push_back({block.first_line, block.last_line, DefectCode::empty_item});
      continue;
    }
    if (!block.has_answer || block.answer.empty()) {
      out.defects.push_back({block.first_line, block.last_line, DefectCode::orphan_question});
      continue;
    }
    if (block.question.empty()) {
      out.defects.push_back({block.first_line, block.last_line, DefectCode::empty_item});
      continue;
    }
    QAPair pair;
    pair.question = Question{block.question, block.ordinal, knowledge_ref};
    pair.answer = Answer{block.answer, knowledge_ref};
    pair.knowledge_ref = knowledge_ref;
    pair.mode = Mode::single_stage;
    out.items.push_back(std::move(pair));
    out.item_lines.emplace_back(block.first_line, block.last_line);
  }

  std::string residue;
  for (size_t i = 0; i < residue_lines.size(); ++i) {
    if (i) residue.push_back('\n');
    residue.append(residue_lines[i]);
  }
  out.residue = std::move(residue);
  return out;
}

std::string render_question_list(const std::vector<Question>& questions) {
  std::string out;
  for (const Question& q : questions) {
    out += std::to_string(q.ordinal);
    out += ". Question: ";
    out += q.text;
    out.push_back('\n');
  }
  return out;
}

std::string render_qa_pair(std::string_view question, std::string_view answer) {
  std::string out = "Question: ";
  out += question;
  out += "\nAnswer: ";
  out += answer;
  out.push_back('\n');
  return out;
}

std::string render_combined(const std::vector<QAPair>& pairs) {
  std::string out;
  for (const QAPair& pair : pairs) {
    out += std::to_string(pair.question.ordinal);
    out += ". Question: ";
    out += pair.question.text;
    out += "\nAnswer: ";
    out += pair.answer.text;
    out.push_back('\n');
  }
  return out;
}

}  // namespace selfqa
