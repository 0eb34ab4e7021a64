#include "discourse/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "discourse/error.hpp"
#include "discourse/text.hpp"

namespace discourse {

std::optional<std::string> validate_post(const Post& p) {
  if (p.id.empty()) return "empty id";
  if (text::trim(p.text).empty()) return "empty text";
  return std::nullopt;
}

void to_json(nlohmann::json& j, const Post& p) {
  j = nlohmann::json{{"id", p.id},
                     {"platform", p.platform},
                     {"author", p.author},
                     {"author_party", p.author_party ? nlohmann::json(*p.author_party) : nlohmann::json()},
                     {"url", p.url},
                     {"published_at", format_timestamp(p.published_at)},
                     {"text", p.text},
                     {"language", p.language}};
}

namespace {

std::string string_field(const nlohmann::json& j, const char* key, bool required) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    if (required) throw FormatError(std::string("missing field '") + key + "'");
    return {};
  }
  if (!it->is_string()) throw FormatError(std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

}  // namespace

void from_json(const nlohmann::json& j, Post& p) {
  if (!j.is_object()) throw FormatError("record is not a JSON object");
  p.id = string_field(j, "id", true);
  p.platform = string_field(j, "platform", false);
  p.author = string_field(j, "author", false);
  auto party = string_field(j, "author_party", false);
  p.author_party = party.empty() ? std::nullopt : std::optional<std::string>(std::move(party));
  p.url = string_field(j, "url", false);
  p.published_at = parse_timestamp(string_field(j, "published_at", true));
  p.text = string_field(j, "text", true);
  auto lang = string_field(j, "language", false);
  p.language = lang.empty() ? "de" : lang;
}

KeywordSet::KeywordSet(const std::vector<std::string>& keywords) {
  for (const auto& k : keywords) {
    auto folded = text::case_fold(text::trim(k));
    if (!folded.empty()) keywords_.insert(std::move(folded));
  }
}

KeywordSet KeywordSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read keyword file " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    words.push_back(t);
  }
  return KeywordSet(words);
}

InputFormat format_for(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? InputFormat::csv : InputFormat::jsonl;
}

namespace {

void load_jsonl(std::istream& in, LoadResult& out) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      Post p = nlohmann::json::parse(line).get<Post>();
      if (auto why = validate_post(p)) {
        out.rejects.push_back({line_no, *why});
        continue;
      }
      out.posts.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      out.rejects.push_back({line_no, std::string("invalid JSON: ") + e.what()});
    } catch (const Error& e) {
      out.rejects.push_back({line_no, e.what()});
    }
  }
}

// One RFC-4180 record; returns false at end of input. `line_no` advances by
// the physical lines consumed.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      ++line_no;
      fields.push_back(std::move(field));
      return true;
    } else if (c == '\n') {
      ++line_no;
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
    }
  }
  if (!any) return false;
  if (in_quotes) throw FormatError("unterminated quoted CSV field");
  fields.push_back(std::move(field));
  ++line_no;
  return true;
}

void load_csv(std::istream& in, LoadResult& out) {
  std::vector<std::string> fields;
  std::size_t line_no = 0;
  if (!read_csv_record(in, fields, line_no)) return;
  constexpr std::size_t ncols = std::size(kCsvColumns);
  if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);
  bool header_ok = fields.size() == ncols;
  for (std::size_t i = 0; header_ok && i < ncols; ++i) header_ok = text::trim(fields[i]) == kCsvColumns[i];
  if (!header_ok) throw FormatError("CSV header must be: id,platform,author,author_party,url,published_at,text,language");

  while (true) {
    const std::size_t record_line = line_no + 1;
    bool got = false;
    try {
      got = read_csv_record(in, fields, line_no);
    } catch (const FormatError& e) {
      out.rejects.push_back({record_line, e.what()});
      break;
    }
    if (!got) break;
    if (fields.size() == 1 && text::trim(fields[0]).empty()) continue;
    if (fields.size() != ncols) {
      out.rejects.push_back({record_line, "expected " + std::to_string(ncols) + " columns, got " +
                                              std::to_string(fields.size())});
      continue;
    }
    try {
      Post p;
      p.id = fields[0];
      p.platform = fields[1];
      p.author = fields[2];
      if (!fields[3].empty()) p.author_party = fields[3];
      p.url = fields[4];
      p.published_at = parse_timestamp(text::trim(fields[5]));
      p.text = fields[6];
      p.language = fields[7].empty() ? "de" : fields[7];
      if (auto why = validate_post(p)) {
        out.rejects.push_back({record_line, *why});
        continue;
      }
      out.posts.push_back(std::move(p));
    } catch (const Error& e) {
      out.rejects.push_back({record_line, e.what()});
    }
  }
}

}  // namespace

LoadResult load_posts(const std::filesystem::path& path, InputFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  LoadResult out;
  if (format == InputFormat::jsonl) {
    load_jsonl(in, out);
  } else {
    load_csv(in, out);
  }
  if (in.bad()) throw IoError("read error on " + path.string());
  return out;
}

void write_rejects(const std::filesystem::path& path, std::span<const Reject> rejects) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : rejects)
    out << nlohmann::json{{"line_number", r.line_number}, {"reason", r.reason}}.dump() << '\n';
}

std::vector<Post> filter_by_keywords(std::span<const Post> posts, const KeywordSet& keywords) {
  std::vector<Post> kept;
  for (const auto& p : posts) {
    for (const auto& tok : text::word_tokens(p.text)) {
      if (keywords.contains(tok)) {
        kept.push_back(p);
        break;
      }
    }
  }
  return kept;
}

std::vector<Post> dedup(std::span<const Post> posts) {
  std::vector<Post> out;
  std::unordered_set<std::string> seen;
  for (const auto& p : posts)
    if (seen.insert(p.id).second) out.push_back(p);
  return out;
}

std::map<Day, std::vector<Post>> partition_by_day(std::span<const Post> posts) {
  std::map<Day, std::vector<Post>> buckets;
  for (const auto& p : posts) buckets[p.day()].push_back(p);
  return buckets;
}

}  // namespace discourse
