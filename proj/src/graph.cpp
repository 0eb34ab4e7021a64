#include "discourse/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <unicode/uchar.h>

#include "discourse/log.hpp"
#include "discourse/text.hpp"

namespace discourse {

std::string to_string(NodeKind k) {
  switch (k) {
    case NodeKind::actor: return "actor";
    case NodeKind::organization: return "organization";
    case NodeKind::hashtag: return "hashtag";
    case NodeKind::topic: return "topic";
  }
  return "actor";
}

std::string to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::intentional: return "intentional";
    case EdgeKind::inferred: return "inferred";
    case EdgeKind::passive_mutual: return "passive_mutual";
  }
  return "intentional";
}

NodeKind node_kind_from_string(std::string_view s) {
  if (s == "actor") return NodeKind::actor;
  if (s == "organization") return NodeKind::organization;
  if (s == "hashtag") return NodeKind::hashtag;
  if (s == "topic") return NodeKind::topic;
  throw FormatError("unknown node kind '" + std::string(s) + "'");
}

EdgeKind edge_kind_from_string(std::string_view s) {
  if (s == "intentional") return EdgeKind::intentional;
  if (s == "inferred") return EdgeKind::inferred;
  if (s == "passive_mutual") return EdgeKind::passive_mutual;
  throw FormatError("unknown edge kind '" + std::string(s) + "'");
}

std::string actor_id(std::string_view name) { return "actor:" + text::case_fold(text::trim(name)); }
std::string organization_id(std::string_view id) { return "org:" + text::case_fold(text::trim(id)); }
std::string hashtag_id(std::string_view tag) { return "hashtag:" + text::case_fold(tag); }
std::string topic_id(int topic) { return "topic:" + std::to_string(topic); }

std::string node_id(NodeKind kind, std::string_view key) {
  switch (kind) {
    case NodeKind::actor: return actor_id(key);
    case NodeKind::organization: return organization_id(key);
    case NodeKind::hashtag: return hashtag_id(key);
    case NodeKind::topic: return "topic:" + std::string(key);
  }
  return actor_id(key);
}

// ---------------------------------------------------------------- extraction

namespace {

bool is_handle_char(char32_t c) {
  const auto cp = static_cast<UChar32>(c);
  return c == U'_' || u_hasBinaryProperty(cp, UCHAR_ALPHABETIC) || u_isdigit(cp);
}

std::vector<std::string> extract_prefixed(std::string_view s, char marker, std::size_t max_chars) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    if (s[pos] != marker) {
      text::next_codepoint(s, pos);
      continue;
    }
    const std::size_t at = pos;
    ++pos;
    if (text::is_word_codepoint(text::codepoint_before(s, at))) continue;
    std::size_t end = pos;
    std::size_t taken = 0;
    while (end < s.size() && taken < max_chars) {
      std::size_t probe = end;
      if (!is_handle_char(text::next_codepoint(s, probe))) break;
      end = probe;
      ++taken;
    }
    if (taken > 0) out.emplace_back(s.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

}  // namespace

std::vector<std::string> extract_mentions(std::string_view text) { return extract_prefixed(text, '@', 30); }

std::vector<std::string> extract_hashtags(std::string_view s) {
  auto tags = extract_prefixed(s, '#', 100);
  for (auto& t : tags) t = text::case_fold(t);
  return tags;
}

// ---------------------------------------------------------------- gazetteer

GazetteerRecognizer::GazetteerRecognizer(std::vector<Entry> entries) {
  for (const auto& e : entries) {
    if (e.kind != NodeKind::actor && e.kind != NodeKind::organization)
      throw ContractViolation("gazetteer entries must be actors or organizations: " + e.canonical_id);
    for (const auto& alias : e.aliases) {
      auto toks = text::word_tokens(alias);
      if (toks.empty()) continue;
      max_len_ = std::max(max_len_, toks.size());
      aliases_.emplace(std::move(toks), Target{e.canonical_id, e.kind});
    }
  }
}

GazetteerRecognizer GazetteerRecognizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read gazetteer " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("gazetteer " + path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw FormatError("gazetteer must be a JSON array");
  std::vector<Entry> entries;
  for (const auto& item : j) {
    Entry e;
    e.canonical_id = item.at("canonical_id").get<std::string>();
    e.kind = node_kind_from_string(item.at("kind").get<std::string>());
    e.aliases = item.at("aliases").get<std::vector<std::string>>();
    entries.push_back(std::move(e));
  }
  return GazetteerRecognizer(std::move(entries));
}

std::vector<EntityMention> GazetteerRecognizer::recognize(std::string_view s) const {
  struct Tok {
    std::string folded;
    text::WordSpan span;
    bool tagged;
  };
  std::vector<Tok> toks;
  text::for_each_word(s, [&](const text::WordSpan& w) {
    const char32_t before = text::codepoint_before(s, w.begin);
    toks.push_back({text::case_fold(s.substr(w.begin, w.end - w.begin)), w, before == U'@' || before == U'#'});
  });
  std::vector<EntityMention> out;
  std::size_t i = 0;
  while (i < toks.size()) {
    bool matched = false;
    for (std::size_t len = std::min(max_len_, toks.size() - i); len >= 1 && !matched; --len) {
      bool tagged = false;
      std::vector<std::string> key;
      for (std::size_t k = i; k < i + len; ++k) {
        tagged = tagged || toks[k].tagged;
        key.push_back(toks[k].folded);
      }
      if (tagged) continue;
      if (auto it = aliases_.find(key); it != aliases_.end()) {
        const auto b = toks[i].span.begin;
        const auto e = toks[i + len - 1].span.end;
        out.push_back({std::string(s.substr(b, e - b)), it->second.canonical_id, it->second.kind});
        i += len;
        matched = true;
      }
    }
    if (!matched) ++i;
  }
  return out;
}

// ---------------------------------------------------------------- profile resolution

std::string url_host(std::string_view url) {
  auto rest = url;
  if (const auto p = rest.find("://"); p != std::string_view::npos) rest = rest.substr(p + 3);
  rest = rest.substr(0, rest.find_first_of("/?#"));
  if (const auto at = rest.rfind('@'); at != std::string_view::npos) rest = rest.substr(at + 1);
  if (const auto colon = rest.find(':'); colon != std::string_view::npos) rest = rest.substr(0, colon);
  std::string host(rest);
  std::transform(host.begin(), host.end(), host.begin(), [](unsigned char c) { return std::tolower(c); });
  if (host.rfind("www.", 0) == 0) host.erase(0, 4);
  if (host.empty() || host.find('.') == std::string::npos)
    throw ContractViolation("cannot parse host from url '" + std::string(url) + "'");
  return host;
}

std::string registrable_domain(std::string_view host) {
  static const std::set<std::string, std::less<>> two_level = {"co.uk", "org.uk", "ac.uk", "gov.uk",
                                                               "com.au", "co.at", "or.at", "gv.at",
                                                               "co.jp", "com.br", "co.nz"};
  std::vector<std::string_view> labels;
  std::size_t start = 0;
  while (true) {
    const auto dot = host.find('.', start);
    labels.push_back(host.substr(start, dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  if (labels.size() <= 2) return std::string(host);
  const std::size_t n = labels.size();
  const std::string last_two = std::string(labels[n - 2]) + "." + std::string(labels[n - 1]);
  if (two_level.count(last_two) != 0) return std::string(labels[n - 3]) + "." + last_two;
  return last_two;
}

ResolvedProfile UrlProfileResolver::resolve(std::string_view url) const {
  static const std::set<std::string, std::less<>> platforms = {
      "x.com",         "twitter.com", "t.me",        "telegram.me", "facebook.com",
      "instagram.com", "tiktok.com",  "youtube.com", "threads.net", "bsky.app"};
  static const std::set<std::string, std::less<>> reserved = {
      "status", "i",     "share", "search", "hashtag", "home",  "intent",  "s",      "watch", "channel",
      "c",      "user",  "p",     "reel",   "video",   "login", "explore", "groups", "events", "shorts"};
  const std::string host = url_host(url);
  const std::string domain = registrable_domain(host);

  std::string_view rest = url;
  if (const auto p = rest.find("://"); p != std::string_view::npos) rest = rest.substr(p + 3);
  const auto slash = rest.find('/');
  std::string_view path = slash == std::string_view::npos ? std::string_view{} : rest.substr(slash + 1);
  path = path.substr(0, path.find_first_of("?#"));
  std::string_view first = path.substr(0, path.find('/'));
  if (domain == "bsky.app" && first == "profile") {
    path = path.substr(std::min(path.size(), first.size() + 1));
    first = path.substr(0, path.find('/'));
  }

  std::string handle;
  if (!first.empty() && first.front() == '@') {
    handle = std::string(first.substr(1));
  } else if (platforms.count(domain) != 0 && !first.empty() && reserved.count(first) == 0) {
    handle = std::string(first);
  }
  if (!handle.empty()) return {actor_id(handle), NodeKind::actor, handle};
  return {organization_id(domain), NodeKind::organization, domain};
}

// ---------------------------------------------------------------- graph container

Node& DiscourseGraph::ensure_node(const std::string& id, NodeKind kind, const std::string& display_name) {
  auto [it, fresh] = nodes_.try_emplace(id, Node{id, kind, display_name, 0});
  return it->second;
}

Node& DiscourseGraph::node_mut(const std::string& id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw NotFound("no node " + id);
  return it->second;
}

void DiscourseGraph::add_edge(std::string source, std::string target, EdgeKind kind, std::uint64_t weight) {
  if (source == target) return;
  if (!nodes_.count(source) || !nodes_.count(target))
    throw ContractViolation("edge endpoint missing: " + source + " -> " + target);
  if (kind == EdgeKind::passive_mutual && target < source) std::swap(source, target);
  edges_[EdgeKey{std::move(source), std::move(target), kind}] += weight;
}

void DiscourseGraph::merge(const DiscourseGraph& other) {
  for (const auto& [id, n] : other.nodes_) ensure_node(id, n.kind, n.display_name).occurrence_count += n.occurrence_count;
  for (const auto& [key, w] : other.edges_) edges_[key] += w;
}

std::vector<Edge> DiscourseGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edges_.size());
  for (const auto& [key, w] : edges_) out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), w});
  return out;
}

const Node* DiscourseGraph::find_node(const std::string& id) const {
  auto it = nodes_.find(id);
  return it == nodes_.end() ? nullptr : &it->second;
}

std::optional<std::uint64_t> DiscourseGraph::edge_weight(const std::string& source, const std::string& target,
                                                         EdgeKind kind) const {
  EdgeKey key{source, target, kind};
  if (kind == EdgeKind::passive_mutual && target < source) key = EdgeKey{target, source, kind};
  auto it = edges_.find(key);
  if (it == edges_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------- build

namespace {

struct NodeRef {
  std::string id;
  NodeKind kind;
  std::string display;
};

struct PostEdges {
  std::vector<NodeRef> nodes;  // every node the post touches, sources first
  std::vector<Edge> edges;
};

void add_unique(std::vector<NodeRef>& v, NodeRef n) {
  for (const auto& x : v)
    if (x.id == n.id) return;
  v.push_back(std::move(n));
}

PostEdges extract_post(const ClassifiedPost& cp, int topic, const EntityRecognizer& recognizer,
                       const ProfileResolver& resolver, const std::map<int, std::string>& topic_labels) {
  const Post& p = cp.post;
  std::vector<NodeRef> sources;
  if (!text::trim(p.author).empty()) add_unique(sources, {actor_id(p.author), NodeKind::actor, p.author});
  if (!text::trim(p.url).empty()) {
    auto r = resolver.resolve(p.url);
    add_unique(sources, {r.node_id, r.kind, r.display_name});
  }
  if (sources.empty()) throw ContractViolation("post has neither author nor url");

  std::vector<NodeRef> intentional;
  for (const auto& m : extract_mentions(p.text)) intentional.push_back({actor_id(m), NodeKind::actor, "@" + m});
  for (const auto& h : extract_hashtags(p.text)) intentional.push_back({hashtag_id(h), NodeKind::hashtag, "#" + h});

  std::vector<NodeRef> inferred;
  for (const auto& e : recognizer.recognize(p.text))
    inferred.push_back({node_id(e.kind, e.canonical_id), e.kind, e.canonical_id});
  std::optional<NodeRef> topic_node;
  if (topic >= 0) {
    auto label = topic_labels.count(topic) ? topic_labels.at(topic) : "topic " + std::to_string(topic);
    topic_node = NodeRef{topic_id(topic), NodeKind::topic, label};
  }

  PostEdges out;
  for (const auto& s : sources) add_unique(out.nodes, s);
  auto is_source = [&](const std::string& id) {
    return std::any_of(sources.begin(), sources.end(), [&](const NodeRef& s) { return s.id == id; });
  };
  for (const auto& s : sources) {
    for (const auto& t : intentional) {
      if (t.id == s.id) continue;
      add_unique(out.nodes, t);
      out.edges.push_back({s.id, t.id, EdgeKind::intentional, 1});
    }
    for (const auto& t : inferred) {
      if (t.id == s.id) continue;
      add_unique(out.nodes, t);
      out.edges.push_back({s.id, t.id, EdgeKind::inferred, 1});
    }
    if (topic_node) {
      add_unique(out.nodes, *topic_node);
      out.edges.push_back({s.id, topic_node->id, EdgeKind::inferred, 1});
    }
  }

  std::vector<NodeRef> co;
  for (const auto& t : intentional)
    if (t.kind == NodeKind::actor && !is_source(t.id)) add_unique(co, t);
  for (const auto& t : inferred)
    if (!is_source(t.id)) add_unique(co, t);
  for (std::size_t i = 0; i < co.size(); ++i)
    for (std::size_t j = i + 1; j < co.size(); ++j)
      out.edges.push_back({co[i].id, co[j].id, EdgeKind::passive_mutual, 1});
  return out;
}

}  // namespace

GraphBuildResult build_graph(std::span<const ClassifiedPost> posts, std::span<const int> topic_assignments,
                             const EntityRecognizer& recognizer, const ProfileResolver& resolver,
                             const std::map<int, std::string>& topic_labels) {
  if (topic_assignments.size() != posts.size())
    throw ContractViolation("topic assignments do not cover the posts");
  GraphBuildResult result;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    PostEdges pe;
    try {
      pe = extract_post(posts[i], topic_assignments[i], recognizer, resolver, topic_labels);
    } catch (const std::exception& e) {
      log::warn("post skipped during graph extraction", {{"post_id", posts[i].post.id}, {"reason", e.what()}});
      result.skipped.push_back({posts[i].post.id, e.what()});
      continue;
    }
    for (const auto& n : pe.nodes) ++result.graph.ensure_node(n.id, n.kind, n.display).occurrence_count;
    for (auto& e : pe.edges) result.graph.add_edge(std::move(e.source), std::move(e.target), e.kind, e.weight);
  }
  return result;
}

// ---------------------------------------------------------------- centrality

CentralityResult eigenvector_centrality(const DiscourseGraph& graph, double tol, std::size_t max_iter) {
  CentralityResult result;
  if (graph.empty()) return result;

  std::vector<std::string> ids;
  std::map<std::string, std::size_t> index;
  for (const auto& [id, n] : graph.nodes()) {
    index.emplace(id, ids.size());
    ids.push_back(id);
  }
  const std::size_t n = ids.size();
  std::vector<std::map<std::size_t, double>> adj(n);
  for (const auto& e : graph.edges()) {
    const auto u = index.at(e.source);
    const auto v = index.at(e.target);
    const auto w = static_cast<double>(e.weight);
    adj[u][v] += w;
    adj[v][u] += w;
  }

  std::vector<double> score(n, 0.0);
  std::vector<int> component(n, -1);
  int ncomp = 0;
  for (std::size_t start = 0; start < n; ++start) {
    if (component[start] >= 0) continue;
    std::vector<std::size_t> members;
    std::queue<std::size_t> q;
    q.push(start);
    component[start] = ncomp;
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      members.push_back(u);
      for (const auto& [v, w] : adj[u]) {
        if (component[v] < 0) {
          component[v] = ncomp;
          q.push(v);
        }
      }
    }
    ++ncomp;
    if (members.size() < 2) continue;
    std::sort(members.begin(), members.end());

    double total_weight = 0.0;
    for (auto u : members)
      for (const auto& [v, w] : adj[u])
        if (u < v) total_weight += w;

    std::map<std::size_t, std::size_t> local;
    for (std::size_t k = 0; k < members.size(); ++k) local[members[k]] = k;
    const std::size_t m = members.size();
    std::vector<double> x(m, 1.0 / std::sqrt(static_cast<double>(m)));
    std::vector<double> y(m);
    bool converged = false;
    std::size_t it = 0;
    while (it < max_iter) {
      ++it;
      for (std::size_t k = 0; k < m; ++k) {
        double acc = x[k];
        for (const auto& [v, w] : adj[members[k]]) acc += w * x[local.at(v)];
        y[k] = acc;
      }
      double norm = 0.0;
      for (double val : y) norm += val * val;
      norm = std::sqrt(norm);
      double diff = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        y[k] /= norm;
        diff = std::max(diff, std::abs(y[k] - x[k]));
      }
      x.swap(y);
      if (diff < tol) {
        converged = true;
        break;
      }
    }
    result.iterations = std::max(result.iterations, it);
    result.converged = result.converged && converged;
    for (std::size_t k = 0; k < m; ++k) score[members[k]] = x[k] * total_weight;
  }
  if (!result.converged)
    log::warn("eigenvector centrality did not converge", {{"max_iter", max_iter}, {"tol", tol}});

  double norm = 0.0;
  for (double s : score) norm += s * s;
  norm = std::sqrt(norm);
  for (std::size_t i = 0; i < n; ++i) result.scores[ids[i]] = norm > 0.0 ? score[i] / norm : 0.0;
  return result;
}

// ---------------------------------------------------------------- views

DiscourseGraph filter_view(const DiscourseGraph& graph, const ViewFilter& filter) {
  std::vector<const Node*> kept;
  for (const auto& [id, n] : graph.nodes())
    if (n.occurrence_count >= filter.min_occurrence && filter.kinds.count(n.kind)) kept.push_back(&n);
  if (filter.top_k && kept.size() > *filter.top_k) {
    std::stable_sort(kept.begin(), kept.end(), [](const Node* a, const Node* b) {
      if (a->occurrence_count != b->occurrence_count) return a->occurrence_count > b->occurrence_count;
      return a->id < b->id;
    });
    kept.resize(*filter.top_k);
  }
  DiscourseGraph out;
  for (const Node* n : kept) out.ensure_node(n->id, n->kind, n->display_name).occurrence_count = n->occurrence_count;
  for (const auto& e : graph.edges())
    if (out.find_node(e.source) && out.find_node(e.target)) out.add_edge(e.source, e.target, e.kind, e.weight);
  return out;
}

nlohmann::json to_node_link(const DiscourseGraph& graph, const std::map<std::string, double>* centrality) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& [id, n] : graph.nodes()) {
    nlohmann::json j = {{"id", id},
                        {"kind", to_string(n.kind)},
                        {"display_name", n.display_name},
                        {"occurrence_count", n.occurrence_count}};
    if (centrality) {
      auto it = centrality->find(id);
      j["centrality"] = it == centrality->end() ? 0.0 : it->second;
    }
    nodes.push_back(std::move(j));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : graph.edges())
    edges.push_back({{"source", e.source},
                     {"target", e.target},
                     {"kind", to_string(e.kind)},
                     {"weight", e.weight},
                     {"directed", e.directed()}});
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

DiscourseGraph from_node_link(const nlohmann::json& j) try {
  DiscourseGraph g;
  if (!j.is_object() || !j.at("nodes").is_array() || !j.at("edges").is_array())
    throw FormatError("node-link graph needs nodes and edges arrays");
  for (const auto& n : j.at("nodes")) {
    g.ensure_node(n.at("id").get<std::string>(), node_kind_from_string(n.at("kind").get<std::string>()),
                  n.value("display_name", std::string{}))
        .occurrence_count += n.at("occurrence_count").get<std::uint64_t>();
  }
  for (const auto& e : j.at("edges"))
    g.add_edge(e.at("source").get<std::string>(), e.at("target").get<std::string>(),
               edge_kind_from_string(e.at("kind").get<std::string>()), e.at("weight").get<std::uint64_t>());
  return g;
} catch (const nlohmann::json::exception& e) {
  throw FormatError(std::string("malformed node-link graph: ") + e.what());
}

}  // namespace discourse
