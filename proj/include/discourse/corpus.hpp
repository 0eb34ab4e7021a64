#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "discourse/timeutil.hpp"

namespace discourse {

/// One ingested social-media or news item.
struct Post {
  std::string id;
  std::string platform;
  std::string author;
  std::optional<std::string> author_party;
  std::string url;
  Timestamp published_at{};
  std::string text;
  std::string language = "de";

  Day day() const { return Day::of(published_at); }
  bool operator==(const Post&) const = default;
};

/// Reason the post violates its invariants, or nullopt when valid.
std::optional<std::string> validate_post(const Post& p);

void to_json(nlohmann::json& j, const Post& p);
/// Throws FormatError on missing/mistyped fields, ContractViolation on bad timestamps.
void from_json(const nlohmann::json& j, Post& p);

/// Case-folded, de-duplicated expert keywords.
class KeywordSet {
 public:
  KeywordSet() = default;
  explicit KeywordSet(const std::vector<std::string>& keywords);

  /// One keyword per line, UTF-8; lines starting with '#' and blank lines skipped.
  static KeywordSet load(const std::filesystem::path& path);

  bool contains(const std::string& folded_token) const { return keywords_.count(folded_token) != 0; }
  std::size_t size() const { return keywords_.size(); }
  const std::set<std::string>& keywords() const { return keywords_; }

 private:
  std::set<std::string> keywords_;
};

enum class InputFormat { jsonl, csv };

/// Infers the format from the file extension (".csv" -> csv, otherwise jsonl).
InputFormat format_for(const std::filesystem::path& path);

struct Reject {
  std::size_t line_number = 0;
  std::string reason;
};

struct LoadResult {
  std::vector<Post> posts;
  std::vector<Reject> rejects;
};

/// CSV column order; the header row must match it exactly.
inline constexpr const char* kCsvColumns[] = {"id",  "platform",     "author", "author_party",
                                              "url", "published_at", "text",   "language"};

/// Reads every parseable record in file order. Invalid records go to the
/// rejects report. Throws IoError when the file cannot be read and
/// FormatError when a CSV header is missing or out of order.
LoadResult load_posts(const std::filesystem::path& path, InputFormat format);

/// Writes the rejects report as JSONL {line_number, reason}.
void write_rejects(const std::filesystem::path& path, std::span<const Reject> rejects);

/// Keeps posts whose text contains a keyword as a whole case-folded token.
std::vector<Post> filter_by_keywords(std::span<const Post> posts, const KeywordSet& keywords);

/// First occurrence per id wins; order preserved.
std::vector<Post> dedup(std::span<const Post> posts);

/// Buckets posts by the UTC date of `published_at`.
std::map<Day, std::vector<Post>> partition_by_day(std::span<const Post> posts);

}  // namespace discourse
