#include <doctest.h>

#include "discourse/error.hpp"
#include "discourse/text.hpp"
#include "discourse/timeutil.hpp"

using namespace discourse;

TEST_SUITE("text") {

TEST_CASE("case folding follows full Unicode folding") {
  CHECK(text::case_fold("Straße") == "strasse");
  CHECK(text::case_fold("ÄRGER über Öl") == "ärger über öl");
  CHECK(text::case_fold("") == "");
}

TEST_CASE("word tokens split on punctuation and keep umlauts and underscores") {
  auto toks = text::word_tokens("Wärmepumpe, Heizung! user_name #tag @x e-mail");
  std::vector<std::string> want{"wärmepumpe", "heizung", "user_name", "tag", "x", "e", "mail"};
  CHECK(toks == want);
}

TEST_CASE("codepoint helpers") {
  std::string s = "aä€";
  CHECK(text::codepoint_count(s) == 3);
  CHECK(text::codepoint_before(s, s.size()) == U'€');
  CHECK(text::codepoint_before(s, 0) == 0);
  std::size_t pos = 1;
  CHECK(text::next_codepoint(s, pos) == U'ä');
  CHECK(pos == 3);
  std::string bad = "\xff";
  pos = 0;
  CHECK(text::next_codepoint(bad, pos) == U'�');
  CHECK(pos == 1);
}

TEST_CASE("sentence splitting") {
  auto s = text::split_sentences("Erster Satz. Zweiter! Dritter? Rest ohne Punkt");
  REQUIRE(s.size() == 4);
  CHECK(s[0] == "Erster Satz.");
  CHECK(s[3] == "Rest ohne Punkt");
  // A period inside a number is not a terminator.
  CHECK(text::split_sentences("Es sind 3.5 Prozent. Gut.").size() == 2);
  CHECK(text::split_sentences("   ").empty());
}

TEST_CASE("day parsing, arithmetic and ISO weeks") {
  auto d = Day::parse("2024-01-10");
  CHECK(d.iso() == "2024-01-10");
  CHECK((d + 1).iso() == "2024-01-11");
  CHECK((d - 10).iso() == "2023-12-31");
  CHECK(Day::parse("2024-03-01") - Day::parse("2024-02-28") == 2);
  CHECK(d.week_start().iso() == "2024-01-08");
  CHECK(Day::parse("2024-01-14").week_start().iso() == "2024-01-08");
  CHECK(Day::parse("2024-01-08").week_start().iso() == "2024-01-08");
  CHECK_THROWS_AS(Day::parse("2024-13-01"), ContractViolation);
  CHECK_THROWS_AS(Day::parse("2024-02-30"), ContractViolation);
  CHECK_THROWS_AS(Day::parse("24-01-01"), ContractViolation);
  CHECK_THROWS_AS(Day::parse("2024-01-01x"), ContractViolation);
}

TEST_CASE("timestamps with offsets normalize to UTC") {
  CHECK(format_timestamp(parse_timestamp("2024-01-10T08:30:00Z")) == "2024-01-10T08:30:00Z");
  CHECK(format_timestamp(parse_timestamp("2024-01-10T01:30:00+02:00")) == "2024-01-09T23:30:00Z");
  CHECK(format_timestamp(parse_timestamp("2024-01-10T23:30:00.123-01:00")) == "2024-01-11T00:30:00Z");
  CHECK(Day::of(parse_timestamp("2024-01-10T23:59:59Z")).iso() == "2024-01-10");
  CHECK_THROWS_AS(parse_timestamp("2024-01-10 08:30:00"), ContractViolation);
  CHECK_THROWS_AS(parse_timestamp("2024-01-10T08:30:00"), ContractViolation);
}

}
