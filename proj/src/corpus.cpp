#include "selfqa/corpus.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "selfqa/errors.hpp"
#include "selfqa/util.hpp"

namespace selfqa {
namespace {

// Replace invalid UTF-8 sequences with U+FFFD, counting replacements.
std::string sanitize_utf8(std::string_view raw, size_t* replacements) {
  std::string out;
  out.reserve(raw.size());
  auto bad = [&](size_t& i) {
    out += "\xEF\xBF\xBD";
    if (replacements) ++*replacements;
    ++i;
  };
  size_t i = 0;
  while (i < raw.size()) {
    unsigned char b0 = static_cast<unsigned char>(raw[i]);
    if (b0 < 0x80) {
      out.push_back(raw[i]);
      ++i;
      continue;
    }
    size_t need = 0;
    if (b0 >= 0xC2 && b0 <= 0xDF) need = 1;
    else if (b0 >= 0xE0 && b0 <= 0xEF) need = 2;
    else if (b0 >= 0xF0 && b0 <= 0xF4) need = 3;
    else { bad(i); continue; }
    if (i + need >= raw.size()) { bad(i); continue; }
    bool ok = true;
    for (size_t k = 1; k <= need; ++k) {
      unsigned char bk = static_cast<unsigned char>(raw[i + k]);
      if (bk < 0x80 || bk > 0xBF) { ok = false; break; }
    }
    if (ok) {
      unsigned char b1 = static_cast<unsigned char>(raw[i + 1]);
      if (b0 == 0xE0 && b1 < 0xA0) ok = false;       // overlong
      else if (b0 == 0xED && b1 > 0x9F) ok = false;  // surrogate
      else if (b0 == 0xF0 && b1 < 0x90) ok = false;  // overlong
      else if (b0 == 0xF4 && b1 > 0x8F) ok = false;  // > U+10FFFF
    }
    if (!ok) { bad(i); continue; }
    out.append(raw.substr(i, need + 1));
    i += need + 1;
  }
  return out;
}

}  // namespace

std::string clean_text(std::string_view raw, const CleaningConfig& cfg,
                       size_t* utf8_replacements) {
  std::string text = sanitize_utf8(raw, utf8_replacements);

  std::string normalized;
  normalized.reserve(text.size());
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
      normalized.push_back('\n');
      continue;
    }
    if (cfg.strip_controls) {
      unsigned char u = static_cast<unsigned char>(c);
      if (u < 0x20 && c != '\n' && c != '\t') continue;
      if (u == 0x7f) continue;
    }
    normalized.push_back(c);
  }

  std::string out;
  out.reserve(normalized.size());
  for (size_t i = 0; i < normalized.size(); ++i) {
    char c = normalized[i];
    if (cfg.collapse_spaces && (c == ' ' || c == '\t')) {
      size_t j = i;
      while (j + 1 < normalized.size() &&
             (normalized[j + 1] == ' ' || normalized[j + 1] == '\t')) {
        ++j;
      }
      bool at_line_end = (j + 1 >= normalized.size()) || normalized[j + 1] == '\n';
      bool at_line_start = out.empty() || out.back() == '\n';
      if (!at_line_end && !at_line_start) out.push_back(' ');
      i = j;
      continue;
    }
    out.push_back(c);
  }
  while (!out.empty() && (out.back() == '\n' || out.back() == ' ')) out.pop_back();
  size_t lead = 0;
  while (lead < out.size() && (out[lead] == '\n' || out[lead] == ' ')) ++lead;
  return out.substr(lead);
}

std::vector<KnowledgeUnit> load_text_corpus(const std::vector<std::string>& paths,
                                            const CleaningConfig& cfg,
                                            IngestReport& report) {
  std::vector<KnowledgeUnit> units;
  for (const auto& path : paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      report.file_errors.emplace_back(path, "unreadable");
      continue;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string cleaned = clean_text(buf.str(), cfg, &report.lossy_decodes);
    if (cleaned.empty()) {
      ++report.dropped_empty;
      continue;
    }
    KnowledgeUnit unit;
    unit.id = path;
    unit.source = path;
    unit.kind = UnitKind::unstructured;
    unit.text = std::move(cleaned);
    units.push_back(std::move(unit));
  }
  if (units.empty() && !paths.empty() && report.file_errors.size() == paths.size()) {
    throw CorpusError("no corpus file could be read");
  }
  return units;
}

KnowledgeUnit linearize_record(const StructuredRecord& record,
                               const std::optional<std::string>& tmpl) {
  if (record.attributes.empty()) {
    throw ConfigError("structured record has no attributes");
  }
  for (const auto& [name, value] : record.attributes) {
    (void)value;
    if (name.empty()) throw ConfigError("structured record has an empty attribute name");
  }

  KnowledgeUnit unit;
  unit.id = record.entity;
  unit.source = record.entity;
  unit.kind = UnitKind::linearized;
  unit.metadata["entity"] = record.entity;

  if (tmpl) {
    unit.text = render_slots(*tmpl, [&](std::string_view slot) -> std::optional<std::string> {
      if (slot == "entity") return record.entity;
      for (const auto& [name, value] : record.attributes) {
        if (name == slot) return value;
      }
      return std::nullopt;
    });
  } else {
    std::string text;
    for (const auto& [name, value] : record.attributes) {
      if (!text.empty()) text.push_back(' ');
      text += name;
      text += ": ";
      text += value;
    }
    unit.text = std::move(text);
  }
  return unit;
}

std::vector<KnowledgeUnit> load_structured_corpus(const std::string& path,
                                                  const std::optional<std::string>& tmpl,
                                                  IngestReport& report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    report.file_errors.emplace_back(path, "unreadable");
    return {};
  }
  std::vector<KnowledgeUnit> units;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    StructuredRecord record;
    try {
      auto j = nlohmann::json::parse(line);
      record.entity = j.at("entity").get<std::string>();
      for (const auto& pair : j.at("attributes")) {
        record.attributes.emplace_back(pair.at(0).get<std::string>(),
                                       pair.at(1).get<std::string>());
      }
      auto unit = linearize_record(record, tmpl);
      unit.id = path + "#" + std::to_string(lineno);
      unit.source = path;
      units.push_back(std::move(unit));
    } catch (const std::exception& e) {
      report.file_errors.emplace_back(path + "#" + std::to_string(lineno), e.what());
    }
  }
  return units;
}

namespace {

bool is_paragraph_boundary(std::string_view text, size_t p) {
  return p >= 2 && text[p - 1] == '\n' && text[p - 2] == '\n';
}

bool is_sentence_boundary(std::string_view text, size_t p) {
  if (p < 2) return false;
  char prev = text[p - 1];
  char punct = text[p - 2];
  return (prev == ' ' || prev == '\n') && (punct == '.' || punct == '!' || punct == '?');
}

bool is_whitespace_boundary(std::string_view text, size_t p) {
  return p >= 1 && std::isspace(static_cast<unsigned char>(text[p - 1]));
}

// Last boundary of the preferred class in (lo, hi]; falls back to hi.
size_t pick_split(std::string_view text, size_t lo, size_t hi) {
  for (auto pred : {is_paragraph_boundary, is_sentence_boundary, is_whitespace_boundary}) {
    for (size_t p = hi; p > lo; --p) {
      if (pred(text, p)) return p;
    }
  }
  return hi;
}

}  // namespace

std::vector<Chunk> chunk_unit(const KnowledgeUnit& unit, size_t max_chars, size_t overlap) {
  if (max_chars == 0) throw ConfigError("max_chars must be positive");
  if (overlap >= max_chars) throw ConfigError("overlap must be smaller than max_chars");
  if (unit.text.empty()) throw ConfigError("cannot chunk an empty unit");

  std::string_view text = unit.text;
  std::vector<Chunk> chunks;
  size_t start = 0;
  while (start < text.size()) {
    size_t end;
    if (text.size() - start <= max_chars) {
      end = text.size();
    } else {
      end = pick_split(text, start + overlap, start + max_chars);
    }
    Chunk chunk;
    chunk.unit_id = unit.id;
    chunk.index = static_cast<int>(chunks.size());
    chunk.text = std::string(text.substr(start, end - start));
    chunk.span_start = start;
    chunk.span_end = end;
    chunks.push_back(std::move(chunk));
    if (end == text.size()) break;
    start = end - overlap;
  }
  return chunks;
}

}  // namespace selfqa
