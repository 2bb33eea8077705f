#include <doctest.h>

#include <random>

#include "selfqa/errors.hpp"
#include "selfqa/filter.hpp"
#include "selfqa/gateway.hpp"
#include "selfqa/parser.hpp"
#include "selfqa/prompts.hpp"
#include "test_support.hpp"

using namespace selfqa;

namespace {

const KnowledgeRef kRef{"unit", 0};

Question make_q(const std::string& text) { return Question{text, 1, kRef}; }
Answer make_a(const std::string& text) { return Answer{text, kRef}; }

QAPair make_pair(const std::string& q, const std::string& a,
                 const std::string& unit = "unit") {
  KnowledgeRef ref{unit, 0};
  return QAPair{Question{q, 1, ref}, Answer{a, ref}, ref, Mode::two_stage};
}

const EmitContext kCtx{"test-model", ""};

}  // namespace

TEST_CASE("reference well-formed questions are accepted") {
  auto rules = RuleSet::defaults();
  CHECK(check_question(make_q("When was DXM founded?"), rules).accept);
  CHECK(check_question(make_q("Where is the headquarters of DXM located?"), rules).accept);
}

TEST_CASE("R1 rejects whole-word demonstratives with evidence") {
  auto rules = RuleSet::defaults();
  auto verdict = check_question(make_q("What does this company do?"), rules);
  CHECK(!verdict.accept);
  CHECK(verdict.rule_code == "R1");
  REQUIRE(verdict.evidence.has_value());
  CHECK(verdict.evidence->matched == "this");
  CHECK(verdict.evidence->offset == 10);
}

TEST_CASE("R1 does not match inside words") {
  auto rules = RuleSet::defaults();
  // 'thistle' is not a whole-word 'this', and bare 'mentioned' is not an
  // R2 phrase
  auto verdict = check_question(make_q("Is thistle mentioned anywhere?"), rules);
  CHECK(verdict.accept);
}

TEST_CASE("R2 rejects passage-reference phrases") {
  auto rules = RuleSet::defaults();
  auto verdict = check_question(make_q("What is stated in the article about DXM?"), rules);
  CHECK(!verdict.accept);
  CHECK(verdict.rule_code == "R2");
}

TEST_CASE("R3 rejects questions under four words") {
  auto rules = RuleSet::defaults();
  auto verdict = check_question(make_q("Why DXM?"), rules);
  CHECK(!verdict.accept);
  CHECK(verdict.rule_code == "R3");
}

TEST_CASE("R4 requires interrogative shape") {
  auto rules = RuleSet::defaults();
  CHECK(check_question(make_q("Describe the founding history of DXM."), rules).accept);
  auto verdict = check_question(make_q("DXM was founded a while ago."), rules);
  CHECK(!verdict.accept);
  CHECK(verdict.rule_code == "R4");
}

TEST_CASE("reference well-formed answers are accepted") {
  auto rules = RuleSet::defaults();
  CHECK(check_answer(make_a("DXM was founded on April 28, 2018."), rules).accept);
}

TEST_CASE("R5 rejects article references with evidence at offset 0") {
  auto rules = RuleSet::defaults();
  auto verdict =
      check_answer(make_a("Based on the above article, DXM was founded in 2018."), rules);
  CHECK(!verdict.accept);
  CHECK(verdict.rule_code == "R5");
  REQUIRE(verdict.evidence.has_value());
  CHECK(verdict.evidence->matched == "Based on the above");
  CHECK(verdict.evidence->offset == 0);
}

TEST_CASE("R6 rejects one-word answers") {
  auto rules = RuleSet::defaults();
  auto verdict = check_answer(make_a("Yes."), rules);
  CHECK(!verdict.accept);
  CHECK(verdict.rule_code == "R6");
}

TEST_CASE("R7 rejects refusal boilerplate heads") {
  auto rules = RuleSet::defaults();
  auto verdict = check_answer(make_a("As an AI model I cannot answer banking questions."), rules);
  CHECK(!verdict.accept);
  CHECK(verdict.rule_code == "R7");
  CHECK(check_answer(make_a("The model called an AI assistant failed."), rules).accept);
}

TEST_CASE("verdicts agree with the reference regex oracle over the fixture corpus") {
  auto rules = RuleSet::defaults();
  size_t cases = 0;
  for (const auto& text : testsupport::filter_fixture_questions()) {
    auto mine = check_question(make_q(text), rules);
    auto oracle = testsupport::oracle_check_question(text);
    CHECK_MESSAGE(mine.accept == oracle.accept, "question: ", text);
    if (!oracle.accept) CHECK_MESSAGE(mine.rule_code == oracle.rule, "question: ", text);
    ++cases;
  }
  for (const auto& text : testsupport::filter_fixture_answers()) {
    auto mine = check_answer(make_a(text), rules);
    auto oracle = testsupport::oracle_check_answer(text);
    CHECK_MESSAGE(mine.accept == oracle.accept, "answer: ", text);
    if (!oracle.accept) CHECK_MESSAGE(mine.rule_code == oracle.rule, "answer: ", text);
    ++cases;
  }
  CHECK(cases == 200);
}

TEST_CASE("dedup drops normalized duplicates within a unit, first wins") {
  std::vector<QAPair> pairs = {
      make_pair("When was DXM founded?", "In 2018, per records."),
      make_pair("when was DXM founded", "Different answer text here."),
  };
  auto result = dedup(pairs);
  REQUIRE(result.kept.size() == 1);
  CHECK(result.kept[0].answer.text == "In 2018, per records.");
  REQUIRE(result.dropped.size() == 1);
  CHECK(result.dropped[0].second == kDuplicateCode);
}

TEST_CASE("identical questions under different units are both kept") {
  std::vector<QAPair> pairs = {
      make_pair("When was DXM founded?", "Answer one here.", "unit_a"),
      make_pair("When was DXM founded?", "Answer two here.", "unit_b"),
  };
  CHECK(dedup(pairs).kept.size() == 2);
  CHECK(dedup({}).kept.empty());
}

TEST_CASE("prune_batch keeps the reference record pairs") {
  std::vector<QAPair> pairs = {
      make_pair("When was DXM founded?", "DXM was founded on April 28, 2018."),
      make_pair("Where is the headquarters of DXM located?",
                "The headquarters of DXM is located at Haidian District, Beijing, China."),
  };
  auto result = prune_batch(pairs, RuleSet::defaults(), kCtx);
  CHECK(result.kept.size() == 2);
  CHECK(result.rejected.empty());
  CHECK(result.kept[0].instruction == "When was DXM founded?");
  CHECK(result.kept[0].model_id == "test-model");
}

TEST_CASE("prune_batch attributes rejections to the matching rule") {
  std::vector<QAPair> pairs = {
      make_pair("What does this company do?", "It sells financial products."),
  };
  auto result = prune_batch(pairs, RuleSet::defaults(), kCtx);
  CHECK(result.kept.empty());
  REQUIRE(result.rejected.size() == 1);
  CHECK(result.rejected[0].second == "R1");
}

TEST_CASE("conservation and idempotence over corrupted mock pairs") {
  BackendConfig config;
  config.seed = 11;
  config.corruption_rate = 0.2;
  auto backend = make_backend(config);
  auto prompts = PromptLibrary::builtin();
  std::vector<QAPair> pairs;
  for (int c = 0; c < 100; ++c) {
    Chunk chunk;
    chunk.unit_id = "unit_" + std::to_string(c);
    chunk.text = "Knowledge body number " + std::to_string(c) + ".";
    auto response = backend->complete(GenerationRequest{
        prompts.combined(chunk, 10).text, "m", 1.0, 4096, {}, ""});
    auto parsed = parse_combined(response.text, chunk.ref());
    pairs.insert(pairs.end(), parsed.items.begin(), parsed.items.end());
  }
  REQUIRE(pairs.size() == 1000);

  auto rules = RuleSet::defaults();
  auto result = prune_batch(pairs, rules, kCtx);
  CHECK(result.kept.size() + result.rejected.size() == 1000);
  CHECK(!result.rejected.empty());  // 20% corruption must reject something

  // idempotence: re-pruning the kept set rejects nothing
  std::vector<QAPair> kept_pairs;
  for (const auto& sample : result.kept) {
    kept_pairs.push_back(make_pair(sample.instruction, sample.output, sample.source_id));
  }
  auto again = prune_batch(kept_pairs, rules, kCtx);
  CHECK(again.rejected.empty());
  CHECK(again.kept.size() == result.kept.size());

  // no kept question carries a demonstrative; no kept answer an R5 phrase
  for (const auto& sample : result.kept) {
    CHECK(testsupport::oracle_check_question(sample.instruction).accept);
    CHECK(testsupport::oracle_check_answer(sample.output).accept);
  }
}

TEST_CASE("disabling a rule never shrinks the kept set") {
  std::vector<QAPair> pairs;
  auto questions = testsupport::filter_fixture_questions();
  auto answers = testsupport::filter_fixture_answers();
  for (size_t i = 0; i < questions.size(); ++i) {
    pairs.push_back(make_pair(questions[i], answers[i % answers.size()],
                              "unit_" + std::to_string(i % 7)));
  }
  auto baseline = prune_batch(pairs, RuleSet::defaults(), kCtx).kept.size();
  for (size_t r = 0; r < RuleSet::defaults().rules.size(); ++r) {
    RuleSet rules = RuleSet::defaults();
    rules.rules[r].enabled = false;
    CHECK(prune_batch(pairs, rules, kCtx).kept.size() >= baseline);
  }
}

TEST_CASE("rules load from a line-delimited file") {
  testsupport::TempDir dir("rules");
  testsupport::write_file(
      dir.file("strict.rules"),
      R"({"code":"X1","target":"question","kind":"word_list","payload":["banana"]})"
      "\n"
      R"({"code":"X2","target":"answer","kind":"min_words","payload":5})"
      "\n");
  auto rules = RuleSet::load(dir.file("strict.rules"));
  REQUIRE(rules.rules.size() == 2);
  CHECK(!check_question(make_q("Why is banana pricing relevant?"), rules).accept);
  CHECK(check_question(make_q("What does this mean?"), rules).accept);  // no R1 in this set
  CHECK(!check_answer(make_a("Too short answer."), rules).accept);
}

TEST_CASE("duplicate rule codes are rejected") {
  testsupport::TempDir dir("rules_dup");
  testsupport::write_file(
      dir.file("bad.rules"),
      R"({"code":"X1","target":"question","kind":"word_list","payload":["a"]})"
      "\n"
      R"({"code":"X1","target":"question","kind":"word_list","payload":["b"]})"
      "\n");
  CHECK_THROWS_AS(RuleSet::load(dir.file("bad.rules")), ConfigError);
}
