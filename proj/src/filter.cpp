#include "selfqa/filter.hpp"

#include <cctype>
#include <fstream>
#include <regex>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "selfqa/errors.hpp"
#include "selfqa/util.hpp"

namespace selfqa {
namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Case-insensitive whole-word occurrence; boundaries are non-alnum.
std::optional<Evidence> find_word(const std::string& lower_text, std::string_view text,
                                  const std::string& word) {
  size_t pos = 0;
  while ((pos = lower_text.find(word, pos)) != std::string::npos) {
    bool left_ok = pos == 0 || !is_word_char(lower_text[pos - 1]);
    size_t end = pos + word.size();
    bool right_ok = end >= lower_text.size() || !is_word_char(lower_text[end]);
    if (left_ok && right_ok) {
      return Evidence{std::string(text.substr(pos, word.size())), pos};
    }
    ++pos;
  }
  return std::nullopt;
}

std::optional<Evidence> find_phrase(const std::string& lower_text, std::string_view text,
                                    const std::string& phrase) {
  size_t pos = lower_text.find(phrase);
  if (pos == std::string::npos) return std::nullopt;
  return Evidence{std::string(text.substr(pos, phrase.size())), pos};
}

std::string first_word(std::string_view text) {
  std::string_view t = trim(text);
  size_t end = 0;
  while (end < t.size() && !std::isspace(static_cast<unsigned char>(t[end]))) ++end;
  std::string word;
  for (char c : t.substr(0, end)) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return word;
}

std::optional<Evidence> apply_rule(const FilterRule& rule, std::string_view text) {
  std::string lower = to_lower_ascii(text);
  switch (rule.kind) {
    case RuleKind::word_list:
      for (const auto& word : rule.payload) {
        if (auto ev = find_word(lower, text, to_lower_ascii(word))) return ev;
      }
      return std::nullopt;
    case RuleKind::phrase_list:
      for (const auto& phrase : rule.payload) {
        if (auto ev = find_phrase(lower, text, to_lower_ascii(phrase))) return ev;
      }
      return std::nullopt;
    case RuleKind::prefix_list: {
      std::string_view body = trim(text);
      std::string lower_body = to_lower_ascii(body);
      for (const auto& prefix : rule.payload) {
        std::string p = to_lower_ascii(prefix);
        if (lower_body.rfind(p, 0) == 0) {
          size_t offset = static_cast<size_t>(body.data() - text.data());
          return Evidence{std::string(body.substr(0, p.size())), offset};
        }
      }
      return std::nullopt;
    }
    case RuleKind::min_words:
      if (count_words(text) < rule.min_words) {
        return Evidence{std::string(trim(text)), 0};
      }
      return std::nullopt;
    case RuleKind::regex: {
      if (rule.payload.empty()) return std::nullopt;
      std::regex re(rule.payload.front(), std::regex::icase);
      std::match_results<std::string_view::const_iterator> m;
      if (std::regex_search(text.begin(), text.end(), m, re)) {
        return Evidence{m.str(0), static_cast<size_t>(m.position(0))};
      }
      return std::nullopt;
    }
    case RuleKind::question_form: {
      std::string_view body = trim(text);
      if (!body.empty() && body.back() == '?') return std::nullopt;
      std::string head = first_word(body);
      for (const auto& cue : rule.payload) {
        if (head == to_lower_ascii(cue)) return std::nullopt;
      }
      return Evidence{head, 0};
    }
  }
  return std::nullopt;
}

FilterVerdict check_text(std::string_view text, RuleTarget target, const RuleSet& rules) {
  for (const FilterRule& rule : rules.rules) {
    if (!rule.enabled || rule.target != target) continue;
    if (auto ev = apply_rule(rule, text)) {
      return FilterVerdict{false, rule.code, std::move(ev)};
    }
  }
  return FilterVerdict{};
}

RuleTarget target_from_string(const std::string& s) {
  if (s == "question") return RuleTarget::question;
  if (s == "answer") return RuleTarget::answer;
  if (s == "pair") return RuleTarget::pair;
  throw ConfigError("unknown rule target '" + s + "'");
}

RuleKind kind_from_string(const std::string& s) {
  if (s == "word_list") return RuleKind::word_list;
  if (s == "phrase_list") return RuleKind::phrase_list;
  if (s == "prefix_list") return RuleKind::prefix_list;
  if (s == "min_words") return RuleKind::min_words;
  if (s == "regex") return RuleKind::regex;
  if (s == "question_form") return RuleKind::question_form;
  throw ConfigError("unknown rule kind '" + s + "'");
}

}  // namespace

const char* to_string(RuleTarget t) {
  switch (t) {
    case RuleTarget::question: return "question";
    case RuleTarget::answer: return "answer";
    case RuleTarget::pair: return "pair";
  }
  return "?";
}

const char* to_string(RuleKind k) {
  switch (k) {
    case RuleKind::word_list: return "word_list";
    case RuleKind::phrase_list: return "phrase_list";
    case RuleKind::prefix_list: return "prefix_list";
    case RuleKind::min_words: return "min_words";
    case RuleKind::regex: return "regex";
    case RuleKind::question_form: return "question_form";
  }
  return "?";
}

RuleSet RuleSet::defaults() {
  RuleSet set;
  set.rules = {
      {"R1", RuleTarget::question, RuleKind::word_list,
       {"this", "these", "that", "those"}, 0, true,
       "demonstrative pronoun in question"},
      {"R2", RuleTarget::question, RuleKind::phrase_list,
       {"the article", "the above", "the passage", "the text", "mentioned above"}, 0, true,
       "question refers to the source passage"},
      {"R3", RuleTarget::question, RuleKind::min_words, {}, 4, true,
       "question shorter than 4 words"},
      {"R4", RuleTarget::question, RuleKind::question_form,
       {"what", "who", "whom", "whose", "when", "where", "why", "how", "which",
        "is", "are", "was", "were", "do", "does", "did", "can", "could", "should",
        "would", "will", "shall", "may", "might", "list", "describe", "explain",
        "name", "state", "define", "compare", "summarize", "give", "tell",
        "identify"},
       0, true, "not interrogative or imperative"},
      {"R5", RuleTarget::answer, RuleKind::phrase_list,
       {"based on the above", "according to the article", "in the above",
        "the passage states", "as mentioned above"},
       0, true, "answer refers to the source passage"},
      {"R6", RuleTarget::answer, RuleKind::min_words, {}, 3, true,
       "answer shorter than 3 words"},
      {"R7", RuleTarget::answer, RuleKind::prefix_list, {"As an AI", "I cannot"}, 0, true,
       "refusal or assistant boilerplate"},
  };
  return set;
}

RuleSet RuleSet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open rules file: " + path);
  RuleSet set;
  std::unordered_set<std::string> codes;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    FilterRule rule;
    rule.code = j.at("code").get<std::string>();
    rule.target = target_from_string(j.at("target").get<std::string>());
    rule.kind = kind_from_string(j.at("kind").get<std::string>());
    if (rule.kind == RuleKind::min_words) {
      rule.min_words = j.at("payload").get<size_t>();
    } else {
      rule.payload = j.at("payload").get<std::vector<std::string>>();
    }
    rule.enabled = j.value("enabled", true);
    rule.description = j.value("description", "");
    if (!codes.insert(rule.code).second) {
      throw ConfigError(path + ": duplicate rule code '" + rule.code + "'");
    }
    set.rules.push_back(std::move(rule));
  }
  return set;
}

FilterVerdict check_question(const Question& q, const RuleSet& rules) {
  return check_text(q.text, RuleTarget::question, rules);
}

FilterVerdict check_answer(const Answer& a, const RuleSet& rules) {
  return check_text(a.text, RuleTarget::answer, rules);
}

DedupResult dedup(const std::vector<QAPair>& pairs) {
  DedupResult result;
  std::unordered_map<std::string, std::unordered_set<std::string>> seen;  // unit -> keys
  for (const QAPair& pair : pairs) {
    std::string key = normalize_dedup(pair.question.text);
    if (seen[pair.knowledge_ref.unit_id].insert(key).second) {
      result.kept.push_back(pair);
    } else {
      result.dropped.emplace_back(pair, kDuplicateCode);
    }
  }
  return result;
}

PruneResult prune_batch(const std::vector<QAPair>& pairs, const RuleSet& rules,
                        const EmitContext& ctx) {
  PruneResult result;
  std::vector<QAPair> survivors;
  for (const QAPair& pair : pairs) {
    FilterVerdict verdict = check_question(pair.question, rules);
    if (verdict.accept) verdict = check_answer(pair.answer, rules);
    if (verdict.accept) {
      survivors.push_back(pair);
    } else {
      result.rejected.emplace_back(pair, verdict.rule_code);
    }
  }
  DedupResult dd = dedup(survivors);
  for (auto& [pair, reason] : dd.dropped) result.rejected.emplace_back(pair, reason);
  for (const QAPair& pair : dd.kept) {
    InstructionSample sample;
    sample.instruction = pair.question.text;
    sample.output = pair.answer.text;
    sample.source_id = pair.knowledge_ref.unit_id;
    sample.chunk_index = pair.knowledge_ref.chunk_index;
    sample.mode = pair.mode;
    sample.model_id = ctx.model_id;
    sample.created_at = ctx.created_at;
    result.kept.push_back(std::move(sample));
  }
  return result;
}

}  // namespace selfqa
