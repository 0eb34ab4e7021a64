#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "discourse/classify.hpp"
#include "discourse/error.hpp"

namespace discourse {

enum class NodeKind { actor, organization, hashtag, topic };
enum class EdgeKind { intentional, inferred, passive_mutual };

std::string to_string(NodeKind k);
std::string to_string(EdgeKind k);
NodeKind node_kind_from_string(std::string_view s);
EdgeKind edge_kind_from_string(std::string_view s);

inline const std::set<NodeKind> kAllNodeKinds{NodeKind::actor, NodeKind::organization, NodeKind::hashtag,
                                              NodeKind::topic};

/// Node id conventions: "actor:<folded handle or name>", "org:<id>",
/// "hashtag:<folded tag>", "topic:<id>".
std::string actor_id(std::string_view name_or_handle);
std::string organization_id(std::string_view id);
std::string hashtag_id(std::string_view tag);
std::string topic_id(int topic);
std::string node_id(NodeKind kind, std::string_view key);

struct Node {
  std::string id;
  NodeKind kind = NodeKind::actor;
  std::string display_name;
  std::uint64_t occurrence_count = 0;
  bool operator==(const Node&) const = default;
};

struct Edge {
  std::string source;
  std::string target;
  EdgeKind kind = EdgeKind::intentional;
  std::uint64_t weight = 0;
  bool directed() const { return kind != EdgeKind::passive_mutual; }
  bool operator==(const Edge&) const = default;
};

/// Handles following '@' (1-30 letters, digits or underscores), in text order
/// with duplicates kept. The '@' must not follow a word character, so e-mail
/// addresses never match. Longer runs are cut after 30 characters.
std::vector<std::string> extract_mentions(std::string_view text);

/// Case-folded tags following '#' (1-100 word characters), same boundary rule.
std::vector<std::string> extract_hashtags(std::string_view text);

struct EntityMention {
  std::string surface;
  std::string canonical_id;
  NodeKind kind = NodeKind::actor;
};

class EntityRecognizer {
 public:
  virtual ~EntityRecognizer() = default;
  virtual std::vector<EntityMention> recognize(std::string_view text) const = 0;
};

/// Alias gazetteer: longest non-overlapping match of case-folded alias token
/// sequences, scanning left to right. Tokens written as @handle or #tag are
/// skipped since the explicit extractors already cover them.
class GazetteerRecognizer final : public EntityRecognizer {
 public:
  struct Entry {
    std::string canonical_id;
    NodeKind kind = NodeKind::actor;  ///< actor or organization
    std::vector<std::string> aliases;
  };

  explicit GazetteerRecognizer(std::vector<Entry> entries);
  /// JSON array of {canonical_id, kind, aliases:[...]}.
  static GazetteerRecognizer load(const std::filesystem::path& path);

  std::vector<EntityMention> recognize(std::string_view text) const override;

 private:
  struct Target {
    std::string canonical_id;
    NodeKind kind;
  };
  std::map<std::vector<std::string>, Target> aliases_;
  std::size_t max_len_ = 0;
};

struct ResolvedProfile {
  std::string node_id;
  NodeKind kind = NodeKind::organization;
  std::string display_name;
};

class ProfileResolver {
 public:
  virtual ~ProfileResolver() = default;
  virtual ResolvedProfile resolve(std::string_view url) const = 0;
};

/// Profile URLs on known social platforms (x.com/<handle>, t.me/<handle>,
/// youtube.com/@<handle>, ...) resolve to the actor for that handle; any
/// other URL resolves to an organization keyed by its registrable domain.
/// Throws ContractViolation when no host can be parsed.
class UrlProfileResolver final : public ProfileResolver {
 public:
  ResolvedProfile resolve(std::string_view url) const override;
};

/// Host part of a URL, lower-cased, without "www." and port.
std::string url_host(std::string_view url);
/// Last two labels of the host, three for known two-level public suffixes.
std::string registrable_domain(std::string_view host);

/// Typed weighted interaction graph. Edges are collapsed per
/// (source, target, kind); passive-mutual edges store the smaller id first.
class DiscourseGraph {
 public:
  /// Inserts the node if absent (keeping the first display name).
  Node& ensure_node(const std::string& id, NodeKind kind, const std::string& display_name);
  /// Adds `weight` to the edge; endpoints must already exist.
  void add_edge(std::string source, std::string target, EdgeKind kind, std::uint64_t weight = 1);
  /// Adds occurrence counts and edge weights of `other` into this graph.
  void merge(const DiscourseGraph& other);

  const std::map<std::string, Node>& nodes() const { return nodes_; }
  std::vector<Edge> edges() const;
  const Node* find_node(const std::string& id) const;
  std::optional<std::uint64_t> edge_weight(const std::string& source, const std::string& target,
                                           EdgeKind kind) const;
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  bool empty() const { return nodes_.empty(); }

  Node& node_mut(const std::string& id);

 private:
  using EdgeKey = std::tuple<std::string, std::string, EdgeKind>;
  std::map<std::string, Node> nodes_;
  std::map<EdgeKey, std::uint64_t> edges_;
};

struct GraphBuildResult {
  DiscourseGraph graph;
  std::vector<ItemError> skipped;
};

/// Per post:
///  (a) sources = author actor node and the resolver's node for the post URL;
///  (b) intentional edges source -> each @mention actor and #hashtag;
///  (c) inferred edges source -> each recognized entity and the post's topic;
///  (d) passive-mutual edges between every pair of distinct co-mentioned
///      entities (mentions and recognized entities, sources excluded);
///  (e) weights accumulate; self-loops are dropped. Each node's occurrence
///      count grows by one per post it takes part in.
/// Posts whose resolver or recognizer throws are skipped and reported.
/// `topic_labels` supplies display names for topic nodes.
GraphBuildResult build_graph(std::span<const ClassifiedPost> posts, std::span<const int> topic_assignments,
                             const EntityRecognizer& recognizer, const ProfileResolver& resolver,
                             const std::map<int, std::string>& topic_labels = {});

struct CentralityResult {
  std::map<std::string, double> scores;
  bool converged = true;
  std::size_t iterations = 0;
};

/// Eigenvector centrality of the symmetrized weighted adjacency matrix,
/// computed per connected component by power iteration on (A + I) from the
/// uniform vector with Euclidean normalization, stopping once successive
/// iterates differ by less than `tol` in the max norm. Component vectors are
/// scaled by the component's total edge weight and the merged vector is
/// normalized to unit length. Nodes without edges score 0.
CentralityResult eigenvector_centrality(const DiscourseGraph& graph, double tol = 1e-10,
                                        std::size_t max_iter = 1000);

struct ViewFilter {
  std::uint64_t min_occurrence = 0;
  std::optional<std::size_t> top_k;
  std::set<NodeKind> kinds = kAllNodeKinds;
};

/// Keeps nodes with occurrence_count >= min_occurrence and an allowed kind,
/// then the top_k by occurrence (ties by id ascending); drops dangling edges.
DiscourseGraph filter_view(const DiscourseGraph& graph, const ViewFilter& filter);

/// Node-link JSON: {nodes:[{id,kind,display_name,occurrence_count[,centrality]}],
/// edges:[{source,target,kind,weight,directed}]}.
nlohmann::json to_node_link(const DiscourseGraph& graph, const std::map<std::string, double>* centrality = nullptr);
DiscourseGraph from_node_link(const nlohmann::json& j);

}  // namespace discourse
