#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "discourse/classify.hpp"
#include "discourse/http_client.hpp"
#include "discourse/timeutil.hpp"

namespace discourse {

/// Row-major list of equal-length vectors.
using Rows = std::vector<std::vector<double>>;

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  virtual Rows embed(std::span<const std::string> texts) = 0;
};

/// Hashed bag-of-words projection: every case-folded word token of at least
/// two codepoints adds +/-1 to bucket FNV-1a(salt, token) mod dimension, with
/// the sign taken from the hash's top bit; the vector is then L2-normalized.
class HashingEmbedder final : public EmbeddingProvider {
 public:
  explicit HashingEmbedder(std::size_t dimension = 256, std::uint64_t salt = 0);
  std::string id() const override;
  Rows embed(std::span<const std::string> texts) override;
  std::size_t dimension() const { return dim_; }

 private:
  std::size_t dim_;
  std::uint64_t salt_;
};

/// POST {"texts": [...]} -> {"vectors": [[...], ...]}
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  explicit RemoteEmbedder(EndpointConfig endpoint);
  std::string id() const override { return "remote:" + client_.config().url; }
  Rows embed(std::span<const std::string> texts) override;

 private:
  JsonHttpClient client_;
};

struct TopicConfig {
  std::size_t target_dim = 5;
  std::size_t min_cluster_size = 10;
  std::size_t top_n_terms = 10;
  std::uint64_t seed = 0;
  int window_days = 14;

  /// Throws ContractViolation unless target_dim in [1, embedding_dim] and min_cluster_size >= 2.
  void validate(std::size_t embedding_dim) const;
};

class Reducer {
 public:
  virtual ~Reducer() = default;
  virtual Rows reduce(const Rows& vectors, std::size_t target_dim, std::uint64_t seed) const = 0;
};

/// Projection onto the top principal components of the centered data. Each
/// component's sign is fixed so its largest-magnitude loading is positive.
/// Input that already has `target_dim` columns, or fewer than two rows, is
/// returned unchanged.
class PcaReducer final : public Reducer {
 public:
  Rows reduce(const Rows& vectors, std::size_t target_dim, std::uint64_t seed) const override;
};

class Clusterer {
 public:
  virtual ~Clusterer() = default;
  /// One label per row; -1 is noise, other labels have >= min_cluster_size members.
  virtual std::vector<int> cluster(const Rows& vectors, std::size_t min_cluster_size) const = 0;
};

/// Hierarchical density clustering.
///
///  1. core distance of a point = distance to its min_cluster_size-th nearest
///     point (the point itself counts as the first);
///  2. mutual reachability d'(a,b) = max(core(a), core(b), |a-b|);
///  3. minimum spanning tree over d', merged in ascending order into a
///     single-linkage hierarchy;
///  4. the hierarchy is condensed: a merge only creates two clusters when both
///     sides hold >= min_cluster_size points, smaller sides fall out as points;
///  5. clusters are picked by excess of mass (stability = sum over member
///     points of lambda_leave - lambda_birth with lambda = 1/d').
///
/// A hierarchy that never splits into two large sides yields one cluster
/// holding every point. Cluster labels are numbered by first appearance in
/// input order.
class DensityClusterer final : public Clusterer {
 public:
  std::vector<int> cluster(const Rows& vectors, std::size_t min_cluster_size) const override;
};

using TermWeights = std::vector<std::pair<std::string, double>>;
using TermCounts = std::map<std::string, std::uint64_t>;

/// Class-based TF-IDF. For class c and term t:
///   W(t,c) = tf(t,c) * ln(1 + A / f(t))
/// with tf the count of t in c, f(t) the count of t over all classes and A the
/// mean token count per class. Each list is sorted by weight descending, ties
/// by term ascending. Throws ContractViolation when there are no classes or
/// no tokens at all; an empty class gets an empty list.
std::map<int, TermWeights> ctfidf(const std::map<int, TermCounts>& docs_by_class);

/// Case-folded word tokens of at least two codepoints, stopwords removed.
class TopicTokenizer {
 public:
  TopicTokenizer() = default;
  explicit TopicTokenizer(std::set<std::string> stopwords);
  /// One stopword per line; '#' comments and blank lines skipped.
  static TopicTokenizer load(const std::filesystem::path& stopword_file);

  std::vector<std::string> operator()(std::string_view text) const;

 private:
  std::set<std::string> stopwords_;
};

struct WindowModel {
  std::vector<int> assignments;           ///< per input post; -1 = noise
  std::map<int, TermWeights> topic_terms;  ///< top_n_terms per topic
};

/// Embeds, reduces, clusters and represents one analysis window. Throws
/// ContractViolation on empty input; provider failures propagate.
WindowModel model_window(std::span<const ClassifiedPost> posts, EmbeddingProvider& provider,
                         const TopicConfig& config, const TopicTokenizer& tokenizer,
                         const Reducer& reducer = PcaReducer{},
                         const Clusterer& clusterer = DensityClusterer{});

struct TopicSnapshot {
  Day day;
  int topic_id = -1;
  TermWeights terms;
  std::size_t size = 0;
  std::vector<std::string> doc_ids;
};

void to_json(nlohmann::json& j, const TopicSnapshot& s);
void from_json(const nlohmann::json& j, TopicSnapshot& s);

/// Representative ids kept per snapshot.
inline constexpr std::size_t kSnapshotDocIds = 3;

/// One snapshot per (day, topic) across the days present in `posts` and every
/// non-noise topic in `assignments`. Terms are c-TF-IDF over that day's
/// documents, classes being the topics active that day.
std::vector<TopicSnapshot> daily_snapshots(std::span<const int> assignments,
                                           std::span<const ClassifiedPost> posts,
                                           const TopicConfig& config, const TopicTokenizer& tokenizer);

}  // namespace discourse
