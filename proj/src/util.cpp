#include "selfqa/util.hpp"

#include <cctype>

#include "selfqa/errors.hpp"
#include "selfqa/types.hpp"

namespace selfqa {

const char* to_string(Mode mode) {
  return mode == Mode::two_stage ? "two_stage" : "single_stage";
}

std::optional<Mode> mode_from_string(std::string_view s) {
  if (s == "two_stage" || s == "two-stage") return Mode::two_stage;
  if (s == "single_stage" || s == "single-stage") return Mode::single_stage;
  return std::nullopt;
}

uint64_t fnv1a64(std::string_view data, uint64_t seed) {
  uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string to_hex(uint64_t value, int digits) {
  static const char* kHex = "0123456789abcdef";
  std::string out(static_cast<size_t>(digits), '0');
  for (int i = digits - 1; i >= 0; --i) {
    out[static_cast<size_t>(i)] = kHex[value & 0xf];
    value >>= 4;
  }
  return out;
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  size_t start = 0;
  while (start <= text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_ws = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_ws = true;
      continue;
    }
    if (in_ws && !out.empty()) out.push_back(' ');
    in_ws = false;
    out.push_back(c);
  }
  return out;
}

size_t count_words(std::string_view s) {
  size_t n = 0;
  bool in_word = false;
  for (char c : s) {
    bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!ws && !in_word) ++n;
    in_word = !ws;
  }
  return n;
}

std::string normalize_compare(std::string_view s) {
  return to_lower_ascii(collapse_whitespace(s));
}

std::string normalize_dedup(std::string_view s) {
  std::string stripped;
  stripped.reserve(s.size());
  for (char c : s) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || std::isspace(u) || u >= 0x80) {
      stripped.push_back(c);
    } else {
      stripped.push_back(' ');
    }
  }
  return to_lower_ascii(collapse_whitespace(stripped));
}

std::string render_slots(
    std::string_view body,
    const std::function<std::optional<std::string>(std::string_view)>& lookup) {
  std::string out;
  out.reserve(body.size());
  for (size_t i = 0; i < body.size(); ++i) {
    char c = body[i];
    if (c == '{') {
      if (i + 1 < body.size() && body[i + 1] == '{') {
        out.push_back('{');
        ++i;
        continue;
      }
      size_t close = body.find('}', i + 1);
      if (close == std::string_view::npos) {
        throw TemplateError("unterminated slot in template", std::string(body.substr(i)));
      }
      std::string_view name = body.substr(i + 1, close - i - 1);
      auto value = lookup(name);
      if (!value) {
        throw TemplateError("template references unknown slot '" + std::string(name) + "'",
                            std::string(name));
      }
      out += *value;
      i = close;
      continue;
    }
    if (c == '}' && i + 1 < body.size() && body[i + 1] == '}') {
      out.push_back('}');
      ++i;
      continue;
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace selfqa
