#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "selfqa/types.hpp"

namespace selfqa {

enum class RuleTarget { question, answer, pair };
enum class RuleKind { word_list, phrase_list, prefix_list, min_words, regex, question_form };

const char* to_string(RuleTarget t);
const char* to_string(RuleKind k);

struct FilterRule {
  std::string code;
  RuleTarget target = RuleTarget::question;
  RuleKind kind = RuleKind::word_list;
  std::vector<std::string> payload;  // words, phrases, prefixes, cues, or a regex
  size_t min_words = 0;
  bool enabled = true;
  std::string description;
};

struct Evidence {
  std::string matched;
  size_t offset = 0;
};

struct FilterVerdict {
  bool accept = true;
  std::string rule_code;             // present iff reject
  std::optional<Evidence> evidence;  // present iff reject
};

// Ordered rule set; the first matching rule rejects.
struct RuleSet {
  std::vector<FilterRule> rules;

  // R1..R7 defaults from the prompt constraints.
  static RuleSet defaults();
  // Line-delimited rules file: {code, target, kind, payload, enabled}.
  static RuleSet load(const std::string& path);
};

FilterVerdict check_question(const Question& q, const RuleSet& rules);
FilterVerdict check_answer(const Answer& a, const RuleSet& rules);

// Reason code attached to dedup drops.
inline constexpr const char* kDuplicateCode = "DUP";

struct DedupResult {
  std::vector<QAPair> kept;
  std::vector<std::pair<QAPair, std::string>> dropped;  // (pair, reason)
};

// Drop a pair when its normalized question already occurred within the
// same knowledge unit; first occurrence wins, order preserved.
DedupResult dedup(const std::vector<QAPair>& pairs);

struct EmitContext {
  std::string model_id;
  std::string created_at;  // empty when timestamping is disabled
};

struct PruneResult {
  std::vector<InstructionSample> kept;
  std::vector<std::pair<QAPair, std::string>> rejected;  // (pair, rule code)
};

// check_question, then check_answer, then dedup; every input lands in
// exactly one of kept or rejected.
PruneResult prune_batch(const std::vector<QAPair>& pairs, const RuleSet& rules,
                        const EmitContext& ctx);

}  // namespace selfqa
