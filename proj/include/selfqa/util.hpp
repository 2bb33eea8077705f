#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace selfqa {

uint64_t fnv1a64(std::string_view data, uint64_t seed = 0xcbf29ce484222325ull);

std::string to_hex(uint64_t value, int digits);

std::string to_lower_ascii(std::string_view s);

std::string_view trim(std::string_view s);

std::vector<std::string_view> split_lines(std::string_view text);

// Collapse all whitespace runs to a single space and trim the ends.
std::string collapse_whitespace(std::string_view s);

size_t count_words(std::string_view s);

// lowercase + whitespace collapse, for loose text comparison
std::string normalize_compare(std::string_view s);

// lowercase, punctuation stripped, whitespace collapsed, for dedup keys
std::string normalize_dedup(std::string_view s);

// Substitute "{slot}" placeholders via the lookup; "{{" and "}}" escape
// literal braces. Values are inserted raw. Throws TemplateError when the
// lookup has no value for a slot.
std::string render_slots(
    std::string_view body,
    const std::function<std::optional<std::string>(std::string_view)>& lookup);

}  // namespace selfqa
