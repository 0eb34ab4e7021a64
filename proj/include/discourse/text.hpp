#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace discourse::text {

/// Default Unicode case folding (full folding: "Straße" -> "strasse").
std::string case_fold(std::string_view utf8);

std::string trim(std::string_view s);

/// Letters, digits, combining marks and connector punctuation (underscore).
bool is_word_codepoint(char32_t c);

/// Byte span of one word token inside the scanned text.
struct WordSpan {
  std::size_t begin;
  std::size_t end;
};

/// Calls `fn` for every maximal run of word codepoints, in text order.
void for_each_word(std::string_view utf8,
                   const std::function<void(const WordSpan&)>& fn);

/// Case-folded word tokens in text order.
std::vector<std::string> word_tokens(std::string_view utf8);

/// Number of Unicode codepoints (invalid bytes count as one each).
std::size_t codepoint_count(std::string_view utf8);

/// Codepoint immediately before byte offset `pos`, or 0 at the start.
char32_t codepoint_before(std::string_view utf8, std::size_t pos);

/// Decodes the codepoint at `pos` and advances `pos`; returns U+FFFD for
/// malformed input.
char32_t next_codepoint(std::string_view utf8, std::size_t& pos);

/// Sentences are maximal runs ending in '.', '!' or '?' followed by
/// whitespace or end of text; trailing text without a terminator counts too.
std::vector<std::string> split_sentences(std::string_view text);

}  // namespace discourse::text
