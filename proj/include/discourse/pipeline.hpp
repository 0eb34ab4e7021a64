#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "discourse/api.hpp"
#include "discourse/classify.hpp"
#include "discourse/error.hpp"
#include "discourse/factcheck.hpp"
#include "discourse/http_client.hpp"
#include "discourse/store.hpp"
#include "discourse/topics.hpp"

namespace discourse {

/// Invalid or inconsistent run configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class BackendSet { stub, remote };

std::string to_string(BackendSet b);
BackendSet backend_set_from_string(std::string_view s);

/// Everything a pipeline run needs. Relative paths in a config file resolve
/// against the file's directory; defaults point at the shipped fixtures.
///
/// Config file keys (all optional):
///   store, input, keywords, rejects, backends ("stub" | "remote"), seed,
///   concurrency, window {from, to},
///   topics {target_dim, min_cluster_size, top_n_terms, window_days, embedding_dim},
///   lexicons {sentiment, hate}, gazetteer, stopwords, prompts,
///   factcheck {fixtures}, eval {annotations, predictions},
///   remote {sentiment, hate, embedding, llm, search, translation}
///     (each {url, timeout_ms, token}),
///   server {listen_address, port, cache_size, cors_origins, bearer_token}
struct RunConfig {
  std::filesystem::path store;
  std::filesystem::path input;
  std::filesystem::path keywords;
  std::optional<std::filesystem::path> rejects;  ///< defaults to <store>/reports/ingest_rejects.jsonl
  BackendSet backends = BackendSet::stub;
  std::uint64_t seed = 0;
  std::size_t concurrency = 4;
  std::optional<Day> from;
  std::optional<Day> to;

  TopicConfig topics;
  std::size_t embedding_dim = 256;

  std::filesystem::path sentiment_lexicon;
  std::filesystem::path hate_lexicon;
  std::filesystem::path gazetteer;
  std::filesystem::path stopwords;
  std::filesystem::path prompts;
  std::optional<std::filesystem::path> factcheck_fixtures;  ///< mock LLM replies + search results
  std::optional<std::filesystem::path> annotations;
  std::optional<std::filesystem::path> predictions;  ///< defaults to the classified dataset

  std::map<std::string, EndpointConfig> remote;  ///< keyed by service name
  ApiConfig server;

  bool dry_run = false;

  /// Defaults rooted at the shipped resource directory.
  static RunConfig defaults();
  /// Overlays the keys present in `j` onto `base`.
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                             RunConfig base = defaults());
  static RunConfig load(const std::filesystem::path& file);

  /// Throws ConfigError when `from` is after `to`, numeric settings are out
  /// of range, or remote endpoints are missing for the remote backend set.
  void validate() const;
};

/// Directory holding the shipped fixtures/ and prompts/.
std::filesystem::path resource_dir();

/// Backend instances for one run.
struct Backends {
  std::unique_ptr<ClassifierBackend> sentiment;
  std::unique_ptr<ClassifierBackend> hate;
  std::unique_ptr<TranslationProvider> translator;
  std::unique_ptr<EmbeddingProvider> embedder;
  std::unique_ptr<LlmClient> llm;
  std::unique_ptr<SearchClient> search;
  PromptSet prompts;

  static Backends create(const RunConfig& config);
};

/// Per-stage summary, also logged.
struct StageReport {
  std::string stage;
  nlohmann::json counts = nlohmann::json::object();
  std::size_t item_errors = 0;
};

// Each stage reads its inputs from the store and writes its dataset
// partitions. A failing stage leaves earlier partitions untouched.
StageReport run_ingest(const RunConfig& config);
StageReport run_classify(const RunConfig& config);
StageReport run_topics(const RunConfig& config);
StageReport run_graph(const RunConfig& config);
StageReport run_factcheck(const RunConfig& config);
/// Writes <store>/reports/eval.json and eval.txt. Skipped when no annotation
/// file is configured.
StageReport run_eval(const RunConfig& config);
std::vector<StageReport> run_all(const RunConfig& config);

/// Window over the topics stage: the configured from/to, or the last
/// `window_days` days ending at the latest classified day.
std::optional<std::pair<Day, Day>> topic_window(const RunConfig& config, const Store& store);

}  // namespace discourse
