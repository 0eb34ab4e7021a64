#include "discourse/text.hpp"

#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

namespace discourse::text {

std::string case_fold(std::string_view utf8) {
  auto folded = icu::UnicodeString::fromUTF8(
                    icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())))
                    .foldCase();
  std::string out;
  folded.toUTF8String(out);
  return out;
}

std::string trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

bool is_word_codepoint(char32_t c) {
  const auto cp = static_cast<UChar32>(c);
  if (u_hasBinaryProperty(cp, UCHAR_ALPHABETIC) || u_isdigit(cp)) return true;
  const auto mask = U_GET_GC_MASK(cp);
  return (mask & (U_GC_M_MASK | U_GC_PC_MASK)) != 0;
}

char32_t next_codepoint(std::string_view utf8, std::size_t& pos) {
  UChar32 c = 0;
  auto i = static_cast<int32_t>(pos);
  U8_NEXT(reinterpret_cast<const uint8_t*>(utf8.data()), i,
          static_cast<int32_t>(utf8.size()), c);
  pos = static_cast<std::size_t>(i);
  return c < 0 ? U'�' : static_cast<char32_t>(c);
}

char32_t codepoint_before(std::string_view utf8, std::size_t pos) {
  if (pos == 0) return 0;
  UChar32 c = 0;
  auto i = static_cast<int32_t>(pos);
  U8_PREV(reinterpret_cast<const uint8_t*>(utf8.data()), 0, i, c);
  return c < 0 ? U'�' : static_cast<char32_t>(c);
}

void for_each_word(std::string_view utf8,
                   const std::function<void(const WordSpan&)>& fn) {
  std::size_t pos = 0;
  std::size_t start = std::string_view::npos;
  while (pos < utf8.size()) {
    const std::size_t here = pos;
    const char32_t c = next_codepoint(utf8, pos);
    if (is_word_codepoint(c)) {
      if (start == std::string_view::npos) start = here;
    } else if (start != std::string_view::npos) {
      fn(WordSpan{start, here});
      start = std::string_view::npos;
    }
  }
  if (start != std::string_view::npos) fn(WordSpan{start, utf8.size()});
}

std::vector<std::string> word_tokens(std::string_view utf8) {
  std::vector<std::string> tokens;
  for_each_word(utf8, [&](const WordSpan& w) {
    tokens.push_back(case_fold(utf8.substr(w.begin, w.end - w.begin)));
  });
  return tokens;
}

std::size_t codepoint_count(std::string_view utf8) {
  std::size_t n = 0;
  for (std::size_t pos = 0; pos < utf8.size(); ++n) next_codepoint(utf8, pos);
  return n;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    const bool at_end = i + 1 == text.size();
    const bool before_space =
        !at_end && (text[i + 1] == ' ' || text[i + 1] == '\n' ||
                    text[i + 1] == '\t' || text[i + 1] == '\r');
    if (!at_end && !before_space) continue;
    auto sentence = trim(text.substr(start, i + 1 - start));
    if (!sentence.empty()) out.push_back(std::move(sentence));
    start = i + 1;
  }
  auto rest = trim(text.substr(start));
  if (!rest.empty()) out.push_back(std::move(rest));
  return out;
}

}  // namespace discourse::text
