#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "discourse/corpus.hpp"
#include "discourse/error.hpp"
#include "discourse/http_client.hpp"

namespace discourse {

struct PromptSet;

// ---------------------------------------------------------------- clients

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string model_id() const = 0;
  virtual std::string complete(const std::string& system_prompt, const std::string& user_prompt) = 0;
};

/// Canned replies keyed by (sha256(system), sha256(user)). Several replies for
/// one key are served in order, the last one repeating. Unknown prompts raise
/// StageError. Safe for concurrent use.
class MockLlmClient final : public LlmClient {
 public:
  MockLlmClient() = default;
  MockLlmClient(MockLlmClient&& other) noexcept;
  void add(const std::string& system_prompt, const std::string& user_prompt, std::string reply);
  /// Reads `<dir>/llm_replies.json`: array of {system|system_sha256, user|user_sha256, reply|replies}.
  static MockLlmClient load(const std::filesystem::path& dir);

  std::string model_id() const override { return "mock"; }
  std::string complete(const std::string& system_prompt, const std::string& user_prompt) override;
  std::size_t calls() const;

 private:
  static std::string key(const std::string& system_digest, const std::string& user_digest);
  mutable std::mutex mu_;
  std::map<std::string, std::vector<std::string>> replies_;
  std::map<std::string, std::size_t> served_;
  std::size_t calls_ = 0;
};

/// Rule-based stand-in used by the `stub` backend set. It reads the payload
/// after the first ": " of the user prompt and answers by stage (recognized by
/// matching the system prompt against the prompt set):
///   claims:  {"statements": [sentences of the payload that contain a digit]}
///   query:   the first eight word tokens of the payload
///   summary: the first sentence of the snippet line
///   verdict: a category chosen by hashing the claim, with a one-sentence reason
class StubLlmClient final : public LlmClient {
 public:
  explicit StubLlmClient(const PromptSet& prompts);
  std::string model_id() const override { return "stub"; }
  std::string complete(const std::string& system_prompt, const std::string& user_prompt) override;

 private:
  std::string claim_system_;
  std::string query_system_;
  std::string summary_system_;
  std::string verdict_system_;
};

/// POST {"system", "user"} -> {"text"}.
class RemoteLlmClient final : public LlmClient {
 public:
  RemoteLlmClient(EndpointConfig endpoint, std::string model = "remote");
  std::string model_id() const override { return model_; }
  std::string complete(const std::string& system_prompt, const std::string& user_prompt) override;

 private:
  JsonHttpClient client_;
  std::string model_;
};

struct SearchResult {
  std::string title;
  std::string url;
  std::string snippet;
};

class SearchClient {
 public:
  virtual ~SearchClient() = default;
  /// Results in relevance order as returned by the engine.
  virtual std::vector<SearchResult> search(const std::string& query) = 0;
};

/// Query -> results lookup from `<dir>/search_results.json`; unknown queries
/// return no results.
class FixtureSearchClient final : public SearchClient {
 public:
  FixtureSearchClient() = default;
  explicit FixtureSearchClient(std::map<std::string, std::vector<SearchResult>> table);
  static FixtureSearchClient load(const std::filesystem::path& dir);
  std::vector<SearchResult> search(const std::string& query) override;

 private:
  std::map<std::string, std::vector<SearchResult>> table_;
};

/// Generates `per_query` synthetic results derived from the query text.
class StubSearchClient final : public SearchClient {
 public:
  explicit StubSearchClient(std::size_t per_query = 4) : per_query_(per_query) {}
  std::vector<SearchResult> search(const std::string& query) override;

 private:
  std::size_t per_query_;
};

/// GET <url>?q=<query> -> [{title, url, snippet}, ...]
class RemoteSearchClient final : public SearchClient {
 public:
  explicit RemoteSearchClient(EndpointConfig endpoint);
  std::vector<SearchResult> search(const std::string& query) override;

 private:
  JsonHttpClient client_;
};

// ---------------------------------------------------------------- prompts

/// Text with `{name}` placeholders.
class PromptTemplate {
 public:
  PromptTemplate() = default;
  explicit PromptTemplate(std::string text);
  /// Reads a UTF-8 file, dropping one trailing newline.
  static PromptTemplate load(const std::filesystem::path& path);

  const std::string& text() const { return text_; }
  std::set<std::string> placeholders() const;
  /// Single-pass substitution. Throws ContractViolation when a placeholder
  /// has no value.
  std::string render(const std::map<std::string, std::string>& values) const;

 private:
  std::string text_;
};

struct PromptSet {
  PromptTemplate claim_system, claim_user;
  PromptTemplate query_system, query_user;
  PromptTemplate summary_system, summary_user;
  PromptTemplate verdict_system, verdict_user;

  /// Loads the eight `<stage>.<system|user>.txt` files from `dir`.
  static PromptSet load(const std::filesystem::path& dir);
};

// ---------------------------------------------------------------- records

struct Claim {
  std::string post_id;
  std::string statement;
  std::string author;
  std::string author_party;
  std::string date;
};

enum class Truthfulness { False, MostlyFalse, HalfTrue, MostlyTrue, True };

inline constexpr std::array<Truthfulness, 5> kTruthfulnessOrder = {
    Truthfulness::False, Truthfulness::MostlyFalse, Truthfulness::HalfTrue, Truthfulness::MostlyTrue,
    Truthfulness::True};

/// "False", "Mostly false", "Half true", "Mostly true", "True".
std::string to_string(Truthfulness t);
/// Exact, case-sensitive match; nullopt otherwise.
std::optional<Truthfulness> truthfulness_from_string(std::string_view s);

struct Verdict {
  Truthfulness category = Truthfulness::HalfTrue;
  std::string reason;
};

struct Evidence {
  std::vector<std::string> summaries;  ///< at most kEvidenceResults
  std::string grounding_context;
  bool no_evidence = false;
};

inline constexpr std::size_t kEvidenceResults = 3;
inline constexpr std::size_t kMaxReasonSentences = 2;

struct FactCheckRecord {
  Claim claim;
  std::string query;
  std::vector<std::string> evidence_summaries;
  std::string grounding_context;
  bool no_evidence = false;
  Verdict verdict;
  std::string channel;
  std::vector<std::string> warnings;
};

void to_json(nlohmann::json& j, const FactCheckRecord& r);
void from_json(const nlohmann::json& j, FactCheckRecord& r);

/// Author, or the platform when the author is blank.
std::string channel_of(const Post& post);

// ---------------------------------------------------------------- pipeline

/// Claim detection, evidence retrieval and verdict prediction. Malformed LLM
/// output is retried once with identical prompts, then raises StageError.
class FactChecker {
 public:
  FactChecker(PromptSet prompts, LlmClient& llm, SearchClient& search);

  std::vector<Claim> extract_claims(const Post& post);
  std::string generate_query(const Claim& claim);
  Evidence retrieve_evidence(const std::string& query);
  /// Reasons longer than two sentences are cut to two and a warning is added.
  Verdict predict_verdict(const Claim& claim, const std::string& grounding_context,
                          std::vector<std::string>* warnings = nullptr);

  /// All three stages for every claim of `post`.
  std::vector<FactCheckRecord> check_post(const Post& post);

  const PromptSet& prompts() const { return prompts_; }

 private:
  PromptSet prompts_;
  LlmClient& llm_;
  SearchClient& search_;
};

struct FactCheckOutcome {
  std::vector<FactCheckRecord> records;  ///< grouped by input post order
  std::vector<ItemError> errors;
};

/// Checks posts with up to `max_in_flight` posts processed concurrently.
FactCheckOutcome run_factcheck(std::span<const Post> posts, FactChecker& checker, std::size_t max_in_flight = 1);

using VerdictCounts = std::array<std::uint64_t, 5>;  ///< indexed like kTruthfulnessOrder

std::map<std::string, VerdictCounts> verdict_histogram(std::span<const FactCheckRecord> records);

/// {"False": n, "Mostly false": n, ...} with all five keys.
nlohmann::json verdict_counts_json(const VerdictCounts& counts);

}  // namespace discourse
