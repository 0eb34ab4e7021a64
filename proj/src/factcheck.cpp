#include "discourse/factcheck.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "discourse/digest.hpp"
#include "discourse/log.hpp"
#include "discourse/text.hpp"

namespace discourse {

// ---------------------------------------------------------------- mock / stub / remote LLM

std::string MockLlmClient::key(const std::string& system_digest, const std::string& user_digest) {
  return system_digest + ":" + user_digest;
}

void MockLlmClient::add(const std::string& system_prompt, const std::string& user_prompt, std::string reply) {
  std::lock_guard lock(mu_);
  replies_[key(sha256_hex(system_prompt), sha256_hex(user_prompt))].push_back(std::move(reply));
}

MockLlmClient::MockLlmClient(MockLlmClient&& other) noexcept {
  std::lock_guard lock(other.mu_);
  replies_ = std::move(other.replies_);
  served_ = std::move(other.served_);
  calls_ = other.calls_;
}

MockLlmClient MockLlmClient::load(const std::filesystem::path& dir) {
  const auto path = dir / "llm_replies.json";
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  MockLlmClient mock;
  for (const auto& item : j) {
    const auto sd = item.contains("system_sha256") ? item.at("system_sha256").get<std::string>()
                                                   : sha256_hex(item.at("system").get<std::string>());
    const auto ud = item.contains("user_sha256") ? item.at("user_sha256").get<std::string>()
                                                 : sha256_hex(item.at("user").get<std::string>());
    auto& slot = mock.replies_[key(sd, ud)];
    if (item.contains("replies")) {
      for (const auto& r : item.at("replies")) slot.push_back(r.is_string() ? r.get<std::string>() : r.dump());
    } else {
      const auto& r = item.at("reply");
      slot.push_back(r.is_string() ? r.get<std::string>() : r.dump());
    }
  }
  return mock;
}

std::string MockLlmClient::complete(const std::string& system_prompt, const std::string& user_prompt) {
  std::lock_guard lock(mu_);
  ++calls_;
  const auto k = key(sha256_hex(system_prompt), sha256_hex(user_prompt));
  auto it = replies_.find(k);
  if (it == replies_.end() || it->second.empty()) throw StageError("mock LLM has no reply for prompt " + k);
  auto& n = served_[k];
  const auto& reply = it->second[std::min(n, it->second.size() - 1)];
  ++n;
  return reply;
}

std::size_t MockLlmClient::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string payload_of(const std::string& user) {
  const auto p = user.find(": ");
  return p == std::string::npos ? user : user.substr(p + 2);
}

}  // namespace

StubLlmClient::StubLlmClient(const PromptSet& prompts)
    : claim_system_(prompts.claim_system.text()),
      query_system_(prompts.query_system.text()),
      summary_system_(prompts.summary_system.text()),
      verdict_system_(prompts.verdict_system.text()) {}

std::string StubLlmClient::complete(const std::string& system, const std::string& user) {
  if (system == claim_system_) {
    auto body = payload_of(user);
    if (!body.empty() && body.back() == '.') body.pop_back();
    nlohmann::json statements = nlohmann::json::array();
    for (const auto& s : text::split_sentences(body))
      if (std::any_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) statements.push_back(s);
    return nlohmann::json{{"statements", statements}}.dump();
  }
  if (system == query_system_) {
    auto body = payload_of(user);
    std::vector<std::string> words;
    text::for_each_word(body, [&](const text::WordSpan& w) {
      if (words.size() < 8) words.emplace_back(body.substr(w.begin, w.end - w.begin));
    });
    std::string q;
    for (const auto& w : words) q += (q.empty() ? "" : " ") + w;
    return "\"" + q + "\"";
  }
  if (system == summary_system_) {
    const auto nl = user.find('\n');
    const auto snippet = nl == std::string::npos ? user : user.substr(nl + 1);
    const auto sentences = text::split_sentences(snippet);
    return sentences.empty() ? std::string("Keine Angaben.") : sentences.front();
  }
  if (system == verdict_system_) {
    const auto ctx = user.find("Context: ");
    const auto claim = payload_of(user.substr(0, ctx));
    const auto category = kTruthfulnessOrder[fnv1a(claim) % kTruthfulnessOrder.size()];
    const std::size_t ctx_len = ctx == std::string::npos ? 0 : user.size() - ctx - 9;
    return nlohmann::json{{"Truthfulness", to_string(category)},
                          {"Reason", "Stub assessment over " + std::to_string(ctx_len) + " characters of context."}}
        .dump();
  }
  throw StageError("stub LLM does not recognize the system prompt");
}

RemoteLlmClient::RemoteLlmClient(EndpointConfig endpoint, std::string model)
    : client_(std::move(endpoint)), model_(std::move(model)) {}

std::string RemoteLlmClient::complete(const std::string& system_prompt, const std::string& user_prompt) {
  const auto reply = client_.post({{"system", system_prompt}, {"user", user_prompt}});
  if (!reply.is_object() || !reply.contains("text") || !reply.at("text").is_string())
    throw FormatError("LLM reply lacks a 'text' string");
  return reply.at("text").get<std::string>();
}

// ---------------------------------------------------------------- search clients

namespace {

std::vector<SearchResult> parse_results(const nlohmann::json& arr) {
  if (!arr.is_array()) throw FormatError("search results must be a JSON array");
  std::vector<SearchResult> out;
  for (const auto& r : arr)
    out.push_back({r.value("title", std::string{}), r.value("url", std::string{}), r.value("snippet", std::string{})});
  return out;
}

}  // namespace

FixtureSearchClient::FixtureSearchClient(std::map<std::string, std::vector<SearchResult>> table)
    : table_(std::move(table)) {}

FixtureSearchClient FixtureSearchClient::load(const std::filesystem::path& dir) {
  const auto path = dir / "search_results.json";
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  std::map<std::string, std::vector<SearchResult>> table;
  for (const auto& [q, results] : j.items()) table[q] = parse_results(results);
  return FixtureSearchClient(std::move(table));
}

std::vector<SearchResult> FixtureSearchClient::search(const std::string& query) {
  auto it = table_.find(query);
  return it == table_.end() ? std::vector<SearchResult>{} : it->second;
}

std::vector<SearchResult> StubSearchClient::search(const std::string& query) {
  std::vector<SearchResult> out;
  const auto h = fnv1a(query);
  for (std::size_t i = 1; i <= per_query_; ++i) {
    std::ostringstream url;
    url << "https://news.example.org/" << std::hex << h << "/" << std::dec << i;
    out.push_back({"Bericht " + std::to_string(i) + ": " + query, url.str(),
                   "Meldung " + std::to_string(i) + " zu " + query + ". Weitere Einzelheiten sind noch offen."});
  }
  return out;
}

RemoteSearchClient::RemoteSearchClient(EndpointConfig endpoint) : client_(std::move(endpoint)) {}

std::vector<SearchResult> RemoteSearchClient::search(const std::string& query) {
  return parse_results(client_.get({{"q", query}}));
}

// ---------------------------------------------------------------- prompts

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read prompt template " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  auto s = ss.str();
  if (!s.empty() && s.back() == '\n') s.pop_back();
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return PromptTemplate(std::move(s));
}

namespace {

bool is_ident(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_'; }

// Placeholder starting at `pos` ('{'); returns its name and end (past '}').
std::optional<std::pair<std::string, std::size_t>> placeholder_at(const std::string& s, std::size_t pos) {
  std::size_t e = pos + 1;
  while (e < s.size() && is_ident(s[e])) ++e;
  if (e == pos + 1 || e >= s.size() || s[e] != '}') return std::nullopt;
  return std::make_pair(s.substr(pos + 1, e - pos - 1), e + 1);
}

}  // namespace

std::set<std::string> PromptTemplate::placeholders() const {
  std::set<std::string> names;
  for (std::size_t i = 0; i < text_.size(); ++i) {
    if (text_[i] != '{') continue;
    if (auto ph = placeholder_at(text_, i)) names.insert(ph->first);
  }
  return names;
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
  std::string out;
  out.reserve(text_.size() + 64);
  std::size_t i = 0;
  while (i < text_.size()) {
    if (text_[i] == '{') {
      if (auto ph = placeholder_at(text_, i)) {
        auto it = values.find(ph->first);
        if (it == values.end()) throw ContractViolation("no value for prompt placeholder {" + ph->first + "}");
        out += it->second;
        i = ph->second;
        continue;
      }
    }
    out.push_back(text_[i++]);
  }
  return out;
}

PromptSet PromptSet::load(const std::filesystem::path& dir) {
  PromptSet p;
  p.claim_system = PromptTemplate::load(dir / "claim_extraction.system.txt");
  p.claim_user = PromptTemplate::load(dir / "claim_extraction.user.txt");
  p.query_system = PromptTemplate::load(dir / "query_generation.system.txt");
  p.query_user = PromptTemplate::load(dir / "query_generation.user.txt");
  p.summary_system = PromptTemplate::load(dir / "evidence_summary.system.txt");
  p.summary_user = PromptTemplate::load(dir / "evidence_summary.user.txt");
  p.verdict_system = PromptTemplate::load(dir / "verdict_prediction.system.txt");
  p.verdict_user = PromptTemplate::load(dir / "verdict_prediction.user.txt");
  return p;
}

// ---------------------------------------------------------------- records

std::string to_string(Truthfulness t) {
  switch (t) {
    case Truthfulness::False: return "False";
    case Truthfulness::MostlyFalse: return "Mostly false";
    case Truthfulness::HalfTrue: return "Half true";
    case Truthfulness::MostlyTrue: return "Mostly true";
    case Truthfulness::True: return "True";
  }
  return "Half true";
}

std::optional<Truthfulness> truthfulness_from_string(std::string_view s) {
  for (auto t : kTruthfulnessOrder)
    if (to_string(t) == s) return t;
  return std::nullopt;
}

void to_json(nlohmann::json& j, const FactCheckRecord& r) {
  j = nlohmann::json{{"claim",
                      {{"post_id", r.claim.post_id},
                       {"statement", r.claim.statement},
                       {"author", r.claim.author},
                       {"author_party", r.claim.author_party},
                       {"date", r.claim.date}}},
                     {"query", r.query},
                     {"evidence_summaries", r.evidence_summaries},
                     {"grounding_context", r.grounding_context},
                     {"no_evidence", r.no_evidence},
                     {"verdict", {{"category", to_string(r.verdict.category)}, {"reason", r.verdict.reason}}},
                     {"channel", r.channel},
                     {"warnings", r.warnings}};
}

void from_json(const nlohmann::json& j, FactCheckRecord& r) {
  const auto& c = j.at("claim");
  r.claim = {c.at("post_id").get<std::string>(), c.at("statement").get<std::string>(),
             c.at("author").get<std::string>(), c.at("author_party").get<std::string>(),
             c.at("date").get<std::string>()};
  r.query = j.at("query").get<std::string>();
  r.evidence_summaries = j.at("evidence_summaries").get<std::vector<std::string>>();
  r.grounding_context = j.at("grounding_context").get<std::string>();
  r.no_evidence = j.value("no_evidence", false);
  const auto cat = truthfulness_from_string(j.at("verdict").at("category").get<std::string>());
  if (!cat) throw FormatError("unknown verdict category in stored record");
  r.verdict = {*cat, j.at("verdict").at("reason").get<std::string>()};
  r.channel = j.at("channel").get<std::string>();
  r.warnings = j.value("warnings", std::vector<std::string>{});
}

std::string channel_of(const Post& post) {
  auto a = text::trim(post.author);
  return a.empty() ? post.platform : a;
}

// ---------------------------------------------------------------- pipeline

namespace {

// Strips a surrounding ``` fence, which chat models like to add.
std::string unfence(std::string s) {
  s = text::trim(s);
  if (s.rfind("```", 0) != 0) return s;
  const auto nl = s.find('\n');
  const auto close = s.rfind("```");
  if (nl == std::string::npos || close <= nl) return s;
  return text::trim(s.substr(nl + 1, close - nl - 1));
}

template <typename Parse>
auto ask_with_retry(LlmClient& llm, const std::string& system, const std::string& user, const char* stage,
                    Parse parse) -> decltype(parse(std::string{})) {
  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const auto reply = llm.complete(system, user);
    try {
      return parse(reply);
    } catch (const FormatError& e) {
      last_error = e.what();
      log::warn("malformed LLM reply", {{"stage", stage}, {"attempt", attempt + 1}, {"reason", last_error}});
    }
  }
  throw StageError(std::string(stage) + ": " + last_error);
}

std::string party_or_unknown(const std::optional<std::string>& p) {
  return p && !text::trim(*p).empty() ? *p : "unknown";
}

}  // namespace

FactChecker::FactChecker(PromptSet prompts, LlmClient& llm, SearchClient& search)
    : prompts_(std::move(prompts)), llm_(llm), search_(search) {}

std::vector<Claim> FactChecker::extract_claims(const Post& post) {
  const std::string date = post.day().iso();
  const std::string party = party_or_unknown(post.author_party);
  const auto system = prompts_.claim_system.render({});
  const auto user =
      prompts_.claim_user.render({{"author", post.author}, {"author_party", party}, {"date", date}, {"query", post.text}});
  const auto statements = ask_with_retry(llm_, system, user, "claim extraction", [](const std::string& reply) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(unfence(reply));
    } catch (const nlohmann::json::exception&) {
      throw FormatError("reply is not JSON");
    }
    if (!j.is_object() || !j.contains("statements") || !j.at("statements").is_array())
      throw FormatError("reply lacks a 'statements' array");
    std::vector<std::string> out;
    for (const auto& s : j.at("statements")) {
      if (!s.is_string()) throw FormatError("statement is not a string");
      out.push_back(s.get<std::string>());
    }
    return out;
  });
  std::vector<Claim> claims;
  for (const auto& s : statements) {
    auto t = text::trim(s);
    if (t.empty()) continue;
    claims.push_back({post.id, std::move(t), post.author, party, date});
  }
  return claims;
}

std::string FactChecker::generate_query(const Claim& claim) {
  const auto system = prompts_.query_system.render({});
  const auto user =
      prompts_.query_user.render({{"author", claim.author}, {"date", claim.date}, {"query", claim.statement}});
  return ask_with_retry(llm_, system, user, "query generation", [](const std::string& reply) {
    auto q = text::trim(reply);
    while (q.size() >= 2 && ((q.front() == '"' && q.back() == '"') || (q.front() == '\'' && q.back() == '\'')))
      q = text::trim(q.substr(1, q.size() - 2));
    if (q.empty()) throw FormatError("empty search query");
    return q;
  });
}

Evidence FactChecker::retrieve_evidence(const std::string& query) {
  if (text::trim(query).empty()) throw ContractViolation("evidence retrieval needs a nonempty query");
  Evidence ev;
  auto results = search_.search(query);
  if (results.size() > kEvidenceResults) results.resize(kEvidenceResults);
  const auto system = prompts_.summary_system.render({});
  for (const auto& r : results) {
    const auto user = prompts_.summary_user.render({{"title", r.title}, {"snippet", r.snippet}});
    ev.summaries.push_back(ask_with_retry(llm_, system, user, "evidence summary", [](const std::string& reply) {
      auto s = text::trim(reply);
      if (s.empty()) throw FormatError("empty summary");
      return s;
    }));
  }
  for (std::size_t i = 0; i < ev.summaries.size(); ++i) ev.grounding_context += (i ? "\n\n" : "") + ev.summaries[i];
  ev.no_evidence = ev.summaries.empty();
  return ev;
}

Verdict FactChecker::predict_verdict(const Claim& claim, const std::string& grounding_context,
                                     std::vector<std::string>* warnings) {
  const auto system = prompts_.verdict_system.render({});
  const auto user = prompts_.verdict_user.render({{"author", claim.author},
                                                  {"author_party", claim.author_party},
                                                  {"date", claim.date},
                                                  {"claim", claim.statement},
                                                  {"grounding_context", grounding_context}});
  Verdict v = ask_with_retry(llm_, system, user, "verdict prediction", [](const std::string& reply) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(unfence(reply));
    } catch (const nlohmann::json::exception&) {
      throw FormatError("reply is not JSON");
    }
    if (!j.is_object() || !j.contains("Truthfulness") || !j.at("Truthfulness").is_string())
      throw FormatError("reply lacks a 'Truthfulness' string");
    const auto cat = truthfulness_from_string(j.at("Truthfulness").get<std::string>());
    if (!cat) throw FormatError("unknown truthfulness category '" + j.at("Truthfulness").get<std::string>() + "'");
    if (!j.contains("Reason") || !j.at("Reason").is_string()) throw FormatError("reply lacks a 'Reason' string");
    return Verdict{*cat, text::trim(j.at("Reason").get<std::string>())};
  });
  const auto sentences = text::split_sentences(v.reason);
  if (sentences.size() > kMaxReasonSentences) {
    v.reason = sentences[0] + " " + sentences[1];
    if (warnings) warnings->push_back("reason truncated from " + std::to_string(sentences.size()) + " sentences to 2");
  }
  return v;
}

std::vector<FactCheckRecord> FactChecker::check_post(const Post& post) {
  std::vector<FactCheckRecord> out;
  for (auto& claim : extract_claims(post)) {
    FactCheckRecord r;
    r.query = generate_query(claim);
    auto ev = retrieve_evidence(r.query);
    r.evidence_summaries = std::move(ev.summaries);
    r.grounding_context = std::move(ev.grounding_context);
    r.no_evidence = ev.no_evidence;
    if (r.no_evidence) r.warnings.push_back("no evidence found");
    r.verdict = predict_verdict(claim, r.grounding_context, &r.warnings);
    r.channel = channel_of(post);
    r.claim = std::move(claim);
    out.push_back(std::move(r));
  }
  return out;
}

FactCheckOutcome run_factcheck(std::span<const Post> posts, FactChecker& checker, std::size_t max_in_flight) {
  struct Slot {
    std::vector<FactCheckRecord> records;
    std::optional<std::string> error;
  };
  std::vector<Slot> slots(posts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < posts.size(); i = next++) {
      try {
        slots[i].records = checker.check_post(posts[i]);
      } catch (const std::exception& e) {
        slots[i].error = e.what();
      }
    }
  };
  const std::size_t width = std::clamp<std::size_t>(max_in_flight, 1, std::max<std::size_t>(1, posts.size()));
  if (width == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < width; ++t) pool.emplace_back(worker);
  }

  FactCheckOutcome out;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    if (slots[i].error) {
      log::warn("fact check failed for post", {{"post_id", posts[i].id}, {"reason", *slots[i].error}});
      out.errors.push_back({posts[i].id, *slots[i].error});
      continue;
    }
    for (auto& r : slots[i].records) out.records.push_back(std::move(r));
  }
  return out;
}

std::map<std::string, VerdictCounts> verdict_histogram(std::span<const FactCheckRecord> records) {
  std::map<std::string, VerdictCounts> hist;
  for (const auto& r : records) {
    auto [it, fresh] = hist.try_emplace(r.channel, VerdictCounts{});
    ++it->second[static_cast<std::size_t>(r.verdict.category)];
  }
  return hist;
}

nlohmann::json verdict_counts_json(const VerdictCounts& counts) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < kTruthfulnessOrder.size(); ++i) j[to_string(kTruthfulnessOrder[i])] = counts[i];
  return j;
}

}  // namespace discourse
