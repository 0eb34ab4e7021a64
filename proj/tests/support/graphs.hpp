#pragma once

// Graph fixtures, random generators and the dense centrality oracle shared by
// unit and acceptance tests.

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "discourse/graph.hpp"

namespace testsupport {

inline discourse::ClassifiedPost classified(std::string id, std::string author, std::string url, std::string text) {
  discourse::ClassifiedPost cp;
  cp.post.id = std::move(id);
  cp.post.platform = "x";
  cp.post.author = std::move(author);
  cp.post.url = std::move(url);
  cp.post.published_at = discourse::parse_timestamp("2024-01-10T12:00:00Z");
  cp.post.text = std::move(text);
  return cp;
}

struct GraphFixture {
  std::vector<discourse::ClassifiedPost> posts;
  std::vector<int> topics;
  discourse::GazetteerRecognizer gazetteer{std::vector<discourse::GazetteerRecognizer::Entry>{}};
  std::map<std::string, std::pair<discourse::NodeKind, std::uint64_t>> nodes;
  std::vector<discourse::Edge> edges;
};

inline GraphFixture load_graph_fixture(const std::string& path) {
  std::ifstream in(path);
  const auto j = nlohmann::json::parse(in);
  GraphFixture fx;
  std::vector<discourse::GazetteerRecognizer::Entry> entries;
  for (const auto& e : j.at("gazetteer"))
    entries.push_back({e.at("canonical_id").get<std::string>(),
                       discourse::node_kind_from_string(e.at("kind").get<std::string>()),
                       e.at("aliases").get<std::vector<std::string>>()});
  fx.gazetteer = discourse::GazetteerRecognizer(std::move(entries));
  for (const auto& p : j.at("posts")) {
    fx.posts.push_back(classified(p.at("id"), p.at("author"), p.at("url"), p.at("text")));
    fx.topics.push_back(p.at("topic").get<int>());
  }
  for (const auto& [id, v] : j.at("expected").at("nodes").items())
    fx.nodes[id] = {discourse::node_kind_from_string(v.at(0).get<std::string>()), v.at(1).get<std::uint64_t>()};
  for (const auto& e : j.at("expected").at("edges"))
    fx.edges.push_back({e.at(0), e.at(1), discourse::edge_kind_from_string(e.at(2).get<std::string>()),
                        e.at(3).get<std::uint64_t>()});
  return fx;
}

/// Human-readable differences between a built graph and the fixture.
inline std::vector<std::string> graph_mismatches(const discourse::DiscourseGraph& g, const GraphFixture& fx) {
  std::vector<std::string> out;
  for (const auto& [id, expect] : fx.nodes) {
    const auto* n = g.find_node(id);
    if (!n) {
      out.push_back("missing node " + id);
      continue;
    }
    if (n->kind != expect.first) out.push_back("wrong kind for " + id);
    if (n->occurrence_count != expect.second)
      out.push_back("node " + id + " count " + std::to_string(n->occurrence_count) + " != " +
                    std::to_string(expect.second));
  }
  for (const auto& [id, n] : g.nodes())
    if (!fx.nodes.count(id)) out.push_back("unexpected node " + id);

  std::map<std::tuple<std::string, std::string, discourse::EdgeKind>, std::uint64_t> expected;
  for (const auto& e : fx.edges) expected[{e.source, e.target, e.kind}] += e.weight;
  std::map<std::tuple<std::string, std::string, discourse::EdgeKind>, std::uint64_t> actual;
  for (const auto& e : g.edges()) actual[{e.source, e.target, e.kind}] = e.weight;
  auto show = [](const auto& k) {
    return std::get<0>(k) + " -> " + std::get<1>(k) + " (" + discourse::to_string(std::get<2>(k)) + ")";
  };
  for (const auto& [k, w] : expected) {
    auto it = actual.find(k);
    if (it == actual.end())
      out.push_back("missing edge " + show(k));
    else if (it->second != w)
      out.push_back("edge " + show(k) + " weight " + std::to_string(it->second) + " != " + std::to_string(w));
  }
  for (const auto& [k, w] : actual)
    if (!expected.count(k)) out.push_back("unexpected edge " + show(k));
  return out;
}

/// Single-source posts (author only, no URL) whose mentions and entities
/// never name the author, with the edge totals they must produce.
struct RandomPosts {
  std::vector<discourse::ClassifiedPost> posts;
  std::vector<int> topics;
  discourse::GazetteerRecognizer gazetteer{std::vector<discourse::GazetteerRecognizer::Entry>{}};
  std::uint64_t expected_intentional = 0;
  std::uint64_t expected_inferred = 0;
  std::uint64_t expected_passive = 0;
};

inline RandomPosts random_posts(std::mt19937& rng, int n) {
  using discourse::NodeKind;
  RandomPosts rp;
  rp.gazetteer = discourse::GazetteerRecognizer({{"ent_alpha", NodeKind::actor, {"Alpha"}},
                                                 {"ent_beta", NodeKind::organization, {"Beta Gamma"}},
                                                 {"ent_delta", NodeKind::actor, {"Delta"}}});
  const std::vector<std::pair<std::string, std::string>> entities{
      {"Alpha", "ent_alpha"}, {"Beta Gamma", "ent_beta"}, {"Delta", "ent_delta"}};
  const std::vector<std::string> filler{"und", "heute", "wieder", "nein", "viel"};
  for (int i = 0; i < n; ++i) {
    const std::string author = "u" + std::to_string(rng() % 6);
    std::vector<std::string> words;
    std::set<std::string> co;
    const int len = static_cast<int>(rng() % 9);
    for (int k = 0; k < len; ++k) {
      switch (rng() % 4) {
        case 0: {
          const auto m = "m" + std::to_string(rng() % 8);
          words.push_back("@" + m);
          co.insert("actor:" + m);
          ++rp.expected_intentional;
          break;
        }
        case 1:
          words.push_back("#h" + std::to_string(rng() % 4));
          ++rp.expected_intentional;
          break;
        case 2: {
          const auto& [surface, id] = entities[rng() % entities.size()];
          words.push_back(surface);
          co.insert("entity:" + id);
          ++rp.expected_inferred;
          break;
        }
        default:
          words.push_back(filler[rng() % filler.size()]);
      }
    }
    std::string text;
    for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
    if (text.empty()) text = "leer";
    const int topic = static_cast<int>(rng() % 5) - 1;
    if (topic >= 0) ++rp.expected_inferred;
    rp.expected_passive += co.size() < 2 ? 0 : co.size() * (co.size() - 1) / 2;
    rp.posts.push_back(classified("r" + std::to_string(i), author, "", text));
    rp.topics.push_back(topic);
  }
  return rp;
}

/// Actor nodes n0..n{count-1} joined by the given undirected weights.
inline discourse::DiscourseGraph graph_from_edges(int count,
                                                  const std::vector<std::tuple<int, int, std::uint64_t>>& edges) {
  discourse::DiscourseGraph g;
  for (int i = 0; i < count; ++i) g.ensure_node("actor:n" + std::to_string(i), discourse::NodeKind::actor, "n");
  for (const auto& [a, b, w] : edges)
    g.add_edge("actor:n" + std::to_string(a), "actor:n" + std::to_string(b), discourse::EdgeKind::passive_mutual, w);
  return g;
}

/// Random multigraph mixing all edge kinds, mean degree around four.
inline discourse::DiscourseGraph random_graph(std::mt19937& rng, int count) {
  discourse::DiscourseGraph g;
  for (int i = 0; i < count; ++i) g.ensure_node("actor:n" + std::to_string(i), discourse::NodeKind::actor, "n");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double p = std::min(1.0, 4.0 / count);
  for (int a = 0; a < count; ++a)
    for (int b = 0; b < count; ++b) {
      if (a == b || u(rng) >= p / 2) continue;
      const auto kind = static_cast<discourse::EdgeKind>(rng() % 3);
      g.add_edge("actor:n" + std::to_string(a), "actor:n" + std::to_string(b), kind, 1 + rng() % 5);
    }
  return g;
}

/// Centrality from a dense symmetric eigendecomposition per connected
/// component (union-find), following the same component weighting and final
/// normalization as the production routine.
inline std::map<std::string, double> dense_centrality(const discourse::DiscourseGraph& g) {
  std::vector<std::string> ids;
  std::map<std::string, int> index;
  for (const auto& [id, n] : g.nodes()) {
    index[id] = static_cast<int>(ids.size());
    ids.push_back(id);
  }
  const int n = static_cast<int>(ids.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : g.edges()) {
    const int u = index.at(e.source), v = index.at(e.target);
    a(u, v) += static_cast<double>(e.weight);
    a(v, u) += static_cast<double>(e.weight);
    parent[find(u)] = find(v);
  }
  std::map<int, std::vector<int>> comps;
  for (int i = 0; i < n; ++i) comps[find(i)].push_back(i);

  Eigen::VectorXd score = Eigen::VectorXd::Zero(n);
  for (const auto& [root, members] : comps) {
    if (members.size() < 2) continue;
    const int m = static_cast<int>(members.size());
    Eigen::MatrixXd sub(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) sub(i, j) = a(members[i], members[j]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
    Eigen::VectorXd v = es.eigenvectors().col(m - 1).cwiseAbs();
    v /= v.norm();
    const double total = sub.sum() / 2.0;
    for (int i = 0; i < m; ++i) score(members[i]) = v(i) * total;
  }
  if (score.norm() > 0) score /= score.norm();
  std::map<std::string, double> out;
  for (int i = 0; i < n; ++i) out[ids[i]] = score(i);
  return out;
}

}  // namespace testsupport
