#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "discourse/corpus.hpp"
#include "discourse/error.hpp"
#include "discourse/http_client.hpp"

namespace discourse {

enum class SentimentLabel { positive, negative, neutral };
enum class HateLabel { hate, normal };

std::string to_string(SentimentLabel l);
std::string to_string(HateLabel l);
SentimentLabel sentiment_label_from_string(std::string_view s);
HateLabel hate_label_from_string(std::string_view s);

struct SentimentResult {
  SentimentLabel label = SentimentLabel::neutral;
  double compound = 0.0;  ///< in [-1, 1]
  bool operator==(const SentimentResult&) const = default;
};

struct HateResult {
  HateLabel label = HateLabel::normal;
  double hate_score = 0.0;  ///< in [0, 1]
  bool operator==(const HateResult&) const = default;
};

/// Compound thresholds; both boundaries are inclusive.
inline constexpr double kPositiveThreshold = 0.05;
inline constexpr double kNegativeThreshold = -0.05;

/// Throws ContractViolation when `compound` lies outside [-1, 1] or is NaN.
SentimentLabel label_from_compound(double compound);

/// Argmax over (normal, hate); a tie resolves to normal. Scores that already
/// form a probability pair are used as-is, anything else is treated as logits
/// and softmax-normalized. Throws ContractViolation on non-finite input.
HateResult hate_from_scores(double normal, double hate);

/// Maps a raw sentiment score vector to a result. Accepts a single compound
/// value or a (negative, neutral, positive) distribution, whose compound is
/// positive - negative.
SentimentResult sentiment_from_scores(std::span<const double> scores);

enum class Capability { sentiment, hate };

/// Batch scorer behind one classifier model.
class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;
  virtual Capability capability() const = 0;
  virtual std::string id() const = 0;
  /// Exactly one score vector per input text. Sentiment backends return
  /// compound or (neg, neu, pos); hate backends return (normal, hate).
  virtual std::vector<std::vector<double>> score(std::span<const std::string> texts) = 0;
};

class TranslationProvider {
 public:
  virtual ~TranslationProvider() = default;
  virtual std::string id() const = 0;
  virtual std::string translate(std::string_view text, std::string_view source_language) = 0;
};

class IdentityTranslator final : public TranslationProvider {
 public:
  std::string id() const override { return "identity"; }
  std::string translate(std::string_view text, std::string_view) override { return std::string(text); }
};

/// POST {"text", "source_language", "target_language"} -> {"text"}.
class RemoteTranslator final : public TranslationProvider {
 public:
  explicit RemoteTranslator(EndpointConfig endpoint, std::string target_language = "en");
  std::string id() const override { return "remote:" + client_.config().url; }
  std::string translate(std::string_view text, std::string_view source_language) override;

 private:
  JsonHttpClient client_;
  std::string target_;
};

/// Deterministic cue-word scorer used in tests and the `stub` backend set.
///
/// Text is split into case-folded word tokens and the lexicon contributions
/// of all tokens are summed into `s` (unknown tokens contribute 0).
///   sentiment: returns {s / sqrt(s*s + 15)}, a compound score in (-1, 1)
///   hate:      returns logits {0.5, s}, so hate wins once cues sum above 0.5
class LexiconBackend final : public ClassifierBackend {
 public:
  LexiconBackend(Capability cap, std::map<std::string, double> lexicon, std::string name = "lexicon");

  /// JSON object mapping term -> score contribution.
  static LexiconBackend load(Capability cap, const std::filesystem::path& path);

  Capability capability() const override { return cap_; }
  std::string id() const override;
  std::vector<std::vector<double>> score(std::span<const std::string> texts) override;

 private:
  Capability cap_;
  std::map<std::string, double> lexicon_;
  std::string name_;
};

/// Remote inference: POST {"texts": [...]} -> {"scores": [[...], ...]}.
class RemoteBackend final : public ClassifierBackend {
 public:
  RemoteBackend(Capability cap, EndpointConfig endpoint);

  Capability capability() const override { return cap_; }
  std::string id() const override { return "remote:" + client_.config().url; }
  std::vector<std::vector<double>> score(std::span<const std::string> texts) override;

 private:
  Capability cap_;
  JsonHttpClient client_;
};

struct ClassifiedPost {
  Post post;
  SentimentResult sentiment;
  HateResult hate;
  std::vector<std::string> backend_ids;
  bool operator==(const ClassifiedPost&) const = default;
};

void to_json(nlohmann::json& j, const ClassifiedPost& c);
void from_json(const nlohmann::json& j, ClassifiedPost& c);

struct ClassifyOptions {
  std::size_t batch_size = 32;
  std::size_t max_concurrency = 1;  ///< concurrent backend batches; backends must tolerate it
};

struct ClassifyOutcome {
  std::vector<ClassifiedPost> posts;  ///< input order, failed posts omitted
  std::vector<ItemError> errors;
};

/// Translates, scores and labels every post. Per-post failures are recorded in
/// `errors` and the batch continues; a transport failure of a backend
/// propagates as RetryableError.
ClassifyOutcome classify_posts(std::span<const Post> posts, ClassifierBackend& sentiment,
                               ClassifierBackend& hate, TranslationProvider& translator,
                               const ClassifyOptions& options = {});

}  // namespace discourse
