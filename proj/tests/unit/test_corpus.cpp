#include <doctest.h>

#include <random>
#include <set>

#include "discourse/corpus.hpp"
#include "discourse/error.hpp"
#include "support/tempdir.hpp"

using namespace discourse;
using testsupport::TempDir;

namespace {

Post make(std::string id, std::string ts, std::string text) {
  Post p;
  p.id = std::move(id);
  p.platform = "x";
  p.author = "a";
  p.published_at = parse_timestamp(ts);
  p.text = std::move(text);
  return p;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("empty file loads nothing") {
  TempDir d;
  auto r = load_posts(d.write("e.jsonl", ""), InputFormat::jsonl);
  CHECK(r.posts.empty());
  CHECK(r.rejects.empty());
}

TEST_CASE("a complete JSONL record round-trips every field") {
  TempDir d;
  auto f = d.write("one.jsonl",
                   R"({"id":"p1","platform":"telegram","author":"kanal","author_party":"spd",)"
                   R"("url":"https://t.me/kanal/1","published_at":"2025-01-22T10:00:00Z","text":"Heizung teuer","language":"de"})"
                   "\n");
  auto r = load_posts(f, InputFormat::jsonl);
  REQUIRE(r.posts.size() == 1);
  const auto& p = r.posts[0];
  CHECK(p.id == "p1");
  CHECK(p.platform == "telegram");
  CHECK(p.author == "kanal");
  CHECK(p.author_party == std::optional<std::string>("spd"));
  CHECK(p.url == "https://t.me/kanal/1");
  CHECK(format_timestamp(p.published_at) == "2025-01-22T10:00:00Z");
  CHECK(p.text == "Heizung teuer");
  CHECK(p.language == "de");
  nlohmann::json j = p;
  CHECK(j.get<Post>() == p);
}

TEST_CASE("record with empty text is rejected with its line number") {
  TempDir d;
  auto f = d.write("three.jsonl",
                   R"({"id":"a","published_at":"2025-01-22T10:00:00Z","text":"eins"})"
                   "\n"
                   R"({"id":"b","published_at":"2025-01-22T10:00:00Z","text":"   "})"
                   "\n"
                   R"({"id":"c","published_at":"2025-01-22T10:00:00Z","text":"drei"})"
                   "\n");
  auto r = load_posts(f, InputFormat::jsonl);
  CHECK(r.posts.size() == 2);
  REQUIRE(r.rejects.size() == 1);
  CHECK(r.rejects[0].line_number == 2);
  CHECK(r.posts[0].language == "de");
}

TEST_CASE("malformed JSON, bad timestamps and missing ids become rejects") {
  TempDir d;
  auto f = d.write("bad.jsonl",
                   "{\"id\":\"a\",\"published_at\":\"yesterday\",\"text\":\"x\"}\n"
                   "{not json}\n"
                   "{\"id\":\"\",\"published_at\":\"2025-01-22T10:00:00Z\",\"text\":\"x\"}\n"
                   "[1,2]\n"
                   "\n"
                   "{\"id\":\"ok\",\"published_at\":\"2025-01-22T10:00:00Z\",\"text\":\"x\"}\n");
  auto r = load_posts(f, InputFormat::jsonl);
  REQUIRE(r.posts.size() == 1);
  CHECK(r.posts[0].id == "ok");
  REQUIRE(r.rejects.size() == 4);
  CHECK(r.rejects[0].line_number == 1);
  CHECK(r.rejects[3].line_number == 4);

  auto rep = d / "rejects.jsonl";
  write_rejects(rep, r.rejects);
  auto content = testsupport::read_file(rep);
  CHECK(std::count(content.begin(), content.end(), '\n') == 4);
  CHECK(nlohmann::json::parse(content.substr(0, content.find('\n'))).at("line_number") == 1);
}

TEST_CASE("unreadable file is an I/O error") {
  CHECK_THROWS_AS(load_posts("/nonexistent/posts.jsonl", InputFormat::jsonl), IoError);
}

TEST_CASE("CSV with quoted fields, embedded newlines and a bad row") {
  TempDir d;
  auto f = d.write("p.csv",
                   "id,platform,author,author_party,url,published_at,text,language\r\n"
                   "1,x,a,,https://x.com/a,2025-01-22T10:00:00Z,\"Hallo, \"\"Welt\"\"\",de\r\n"
                   "2,x,b,cdu,,2025-01-22T11:00:00Z,\"zwei\nZeilen\",\r\n"
                   "3,x,c\r\n"
                   "4,x,d,,,2025-01-22T12:00:00Z,vier,en\r\n");
  CHECK(format_for(f) == InputFormat::csv);
  auto r = load_posts(f, InputFormat::csv);
  REQUIRE(r.posts.size() == 3);
  CHECK(r.posts[0].text == "Hallo, \"Welt\"");
  CHECK_FALSE(r.posts[0].author_party.has_value());
  CHECK(r.posts[1].text == "zwei\nZeilen");
  CHECK(r.posts[1].author_party == std::optional<std::string>("cdu"));
  CHECK(r.posts[1].language == "de");
  CHECK(r.posts[2].language == "en");
  REQUIRE(r.rejects.size() == 1);
  CHECK(r.rejects[0].line_number == 5);
}

TEST_CASE("CSV header must match the documented column order") {
  TempDir d;
  auto f = d.write("h.csv", "id,author,platform,author_party,url,published_at,text,language\n");
  CHECK_THROWS_AS(load_posts(f, InputFormat::csv), FormatError);
  auto g = d.write("g.csv", "1,x,a,,,2025-01-22T10:00:00Z,t,de\n");
  CHECK_THROWS_AS(load_posts(g, InputFormat::csv), FormatError);
}

TEST_CASE("keyword file skips comments and folds case") {
  TempDir d;
  auto kw = KeywordSet::load(d.write("k.txt", "# kommentar\nGrenze\n\n  STRASSE \ngrenze\n"));
  CHECK(kw.size() == 2);
  CHECK(kw.contains("grenze"));
  CHECK(kw.contains("strasse"));
}

TEST_CASE("keyword filter matches whole case-folded tokens") {
  KeywordSet kw({"grenze", "straße"});
  std::vector<Post> posts{make("1", "2025-01-22T10:00:00Z", "Die Grenze ist offen"),
                          make("2", "2025-01-22T10:00:00Z", "Grenzenlos"),
                          make("3", "2025-01-22T10:00:00Z", "Auf der STRASSE"),
                          make("4", "2025-01-22T10:00:00Z", "#Grenze!")};
  auto kept = filter_by_keywords(posts, kw);
  REQUIRE(kept.size() == 3);
  CHECK(kept[0].id == "1");
  CHECK(kept[1].id == "3");
  CHECK(kept[2].id == "4");
  CHECK(filter_by_keywords(std::vector<Post>{}, kw).empty());
  // Idempotent.
  CHECK(filter_by_keywords(kept, kw) == kept);
}

TEST_CASE("dedup keeps first occurrence in order") {
  auto a = make("a", "2025-01-22T10:00:00Z", "eins");
  auto b = make("b", "2025-01-22T10:00:00Z", "zwei");
  auto a2 = make("a", "2025-01-23T10:00:00Z", "anders");
  CHECK(dedup(std::vector<Post>{}).empty());
  CHECK(dedup(std::vector<Post>{a, a2}) == std::vector<Post>{a});
  CHECK(dedup(std::vector<Post>{a, b, a2}) == std::vector<Post>{a, b});
}

TEST_CASE("partition by UTC day splits at midnight") {
  std::vector<Post> posts{make("1", "2025-01-22T23:59:59Z", "x"), make("2", "2025-01-23T00:00:00Z", "y"),
                          make("3", "2025-01-23T01:00:00+02:00", "z")};
  auto parts = partition_by_day(posts);
  REQUIRE(parts.size() == 2);
  CHECK(parts.at(Day::parse("2025-01-22")).size() == 2);
  CHECK(parts.at(Day::parse("2025-01-23")).size() == 1);
  CHECK(partition_by_day(std::vector<Post>{}).empty());
}

TEST_CASE("property: dedup and partition form a disjoint cover") {
  std::mt19937 rng(7);
  for (int round = 0; round < 50; ++round) {
    std::vector<Post> posts;
    const int n = std::uniform_int_distribution<int>(0, 40)(rng);
    for (int i = 0; i < n; ++i) {
      const int id = std::uniform_int_distribution<int>(0, 15)(rng);
      const int day = std::uniform_int_distribution<int>(1, 5)(rng);
      posts.push_back(make("id" + std::to_string(id), "2025-01-0" + std::to_string(day) + "T12:00:00Z", "t"));
    }
    auto unique = dedup(posts);
    std::set<std::string> ids;
    for (const auto& p : unique) ids.insert(p.id);
    CHECK(ids.size() == unique.size());
    CHECK(unique.size() <= posts.size());

    std::multiset<std::string> covered;
    for (const auto& [day, bucket] : partition_by_day(unique))
      for (const auto& p : bucket) {
        CHECK(p.day() == day);
        covered.insert(p.id);
      }
    CHECK(covered == std::multiset<std::string>(ids.begin(), ids.end()));
  }
}

}
