#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "selfqa/corpus.hpp"
#include "selfqa/types.hpp"

namespace testsupport {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("selfqa_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Reference company record; last value carries the knowledge string's closing period.
inline selfqa::StructuredRecord dxm_record() {
  selfqa::StructuredRecord record;
  record.entity = "DXM";
  record.attributes = {
      {"Company", "DXM"},
      {"Founding Date", "April 28, 2018"},
      {"Formerly known as", "Baidu Financial"},
      {"Headquarters Address", "Haidian District, Beijing, China."},
  };
  return record;
}

inline const char* kDxmLinearized =
    "Company: DXM Founding Date: April 28, 2018 Formerly known as: Baidu Financial "
    "Headquarters Address: Haidian District, Beijing, China.";

// Independent rule oracle built on std::regex; mirrors the documented
// default rule semantics without sharing code with the implementation.
struct OracleVerdict {
  bool accept = true;
  std::string rule;
};

inline OracleVerdict oracle_check_question(const std::string& text) {
  static const std::regex r1(R"(\b(this|these|that|those)\b)", std::regex::icase);
  static const std::regex r2(
      R"(the article|the above|the passage|the text|mentioned above)", std::regex::icase);
  static const std::regex word(R"(\S+)");
  static const std::regex r4_cue(
      R"(^\s*(what|who|whom|whose|when|where|why|how|which|is|are|was|were|do|does|did|can|could|should|would|will|shall|may|might|list|describe|explain|name|state|define|compare|summarize|give|tell|identify)\b)",
      std::regex::icase);
  if (std::regex_search(text, r1)) return {false, "R1"};
  if (std::regex_search(text, r2)) return {false, "R2"};
  auto begin = std::sregex_iterator(text.begin(), text.end(), word);
  if (std::distance(begin, std::sregex_iterator()) < 4) return {false, "R3"};
  bool ends_q = std::regex_search(text, std::regex(R"(\?\s*$)"));
  if (!ends_q && !std::regex_search(text, r4_cue)) return {false, "R4"};
  return {true, ""};
}

inline OracleVerdict oracle_check_answer(const std::string& text) {
  static const std::regex r5(
      R"(based on the above|according to the article|in the above|the passage states|as mentioned above)",
      std::regex::icase);
  static const std::regex word(R"(\S+)");
  static const std::regex r7(R"(^\s*(as an ai|i cannot))", std::regex::icase);
  if (std::regex_search(text, r5)) return {false, "R5"};
  auto begin = std::sregex_iterator(text.begin(), text.end(), word);
  if (std::distance(begin, std::sregex_iterator()) < 3) return {false, "R6"};
  if (std::regex_search(text, r7)) return {false, "R7"};
  return {true, ""};
}

// Random valid UTF-8 for fuzzing.
inline std::string random_utf8(std::mt19937_64& rng, size_t max_len) {
  std::uniform_int_distribution<size_t> len_dist(0, max_len);
  std::uniform_int_distribution<uint32_t> cp_dist(1, 0x10FFFF);
  std::uniform_int_distribution<int> ascii_bias(0, 3);
  size_t len = len_dist(rng);
  std::string out;
  for (size_t i = 0; i < len; ++i) {
    uint32_t cp;
    if (ascii_bias(rng) != 0) {
      cp = 1 + rng() % 127;
    } else {
      do {
        cp = cp_dist(rng);
      } while (cp >= 0xD800 && cp <= 0xDFFF);
    }
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

// 200-case fixture corpus for the filter oracle: reference record strings as
// accepts plus constructed violations and benign variations.
inline std::vector<std::string> filter_fixture_questions() {
  std::vector<std::string> fixtures = {
      "When was DXM founded?",
      "Where is the headquarters of DXM located?",
      "What does this company do?",
      "Is thistle mentioned?",
      "What are these figures about?",
      "Summarize the article in one sentence.",
      "Why?",
      "Describe the founding of DXM in detail.",
      "banana banana banana banana",
      "What happened in the above paragraph?",
  };
  const char* subjects[] = {"DXM", "the company", "Baidu Financial", "Haidian District"};
  const char* heads[] = {"When was", "Where is", "What is", "How did", "Why was"};
  const char* tails[] = {"founded?", "established in Beijing?", "renamed?", "regulated?"};
  const char* bad_words[] = {"this", "these", "that", "those"};
  int i = 0;
  while (fixtures.size() < 80) {
    fixtures.push_back(std::string(heads[i % 5]) + " " + subjects[i % 4] + " " +
                       tails[i % 4]);
    ++i;
  }
  i = 0;
  while (fixtures.size() < 100) {
    fixtures.push_back(std::string("What did ") + bad_words[i % 4] + " report say about " +
                       subjects[i % 4] + "?");
    ++i;
  }
  return fixtures;
}

inline std::vector<std::string> filter_fixture_answers() {
  std::vector<std::string> fixtures = {
      "DXM was founded on April 28, 2018.",
      "The headquarters of DXM is located at Haidian District, Beijing, China.",
      "Based on the above article, DXM was founded in 2018.",
      "Yes.",
      "As an AI language model, I cannot answer.",
      "According to the article, the company was renamed.",
      "It was formerly known as Baidu Financial.",
      "No idea.",
      "I cannot answer without more context.",
      "The passage states the company moved to Beijing.",
  };
  const char* facts[] = {"was founded in 2018", "is based in Beijing",
                         "was formerly Baidu Financial", "operates in finance"};
  const char* prefixes[] = {"", "", "", "Based on the above text, ", "As mentioned above, "};
  int i = 0;
  while (fixtures.size() < 100) {
    fixtures.push_back(std::string(prefixes[i % 5]) + "DXM " + facts[i % 4] + ".");
    ++i;
  }
  return fixtures;
}

}  // namespace testsupport
