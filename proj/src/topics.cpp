#include "discourse/topics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "discourse/error.hpp"
#include "discourse/log.hpp"
#include "discourse/text.hpp"

namespace discourse {

// ---------------------------------------------------------------- embedding

namespace {

std::uint64_t fnv1a(std::uint64_t salt, std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (int i = 0; i < 8; ++i) {
    h ^= (salt >> (8 * i)) & 0xFF;
    h *= 1099511628211ULL;
  }
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

HashingEmbedder::HashingEmbedder(std::size_t dimension, std::uint64_t salt) : dim_(dimension), salt_(salt) {
  if (dim_ == 0) throw ContractViolation("embedding dimension must be positive");
}

std::string HashingEmbedder::id() const {
  return "hashing:" + std::to_string(dim_) + ":" + std::to_string(salt_);
}

Rows HashingEmbedder::embed(std::span<const std::string> texts) {
  Rows out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    std::vector<double> v(dim_, 0.0);
    for (const auto& tok : text::word_tokens(t)) {
      if (text::codepoint_count(tok) < 2) continue;
      const auto h = fnv1a(salt_, tok);
      v[h % dim_] += (h >> 63) ? -1.0 : 1.0;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (double& x : v) x /= norm;
    }
    out.push_back(std::move(v));
  }
  return out;
}

RemoteEmbedder::RemoteEmbedder(EndpointConfig endpoint) : client_(std::move(endpoint)) {}

Rows RemoteEmbedder::embed(std::span<const std::string> texts) {
  const auto reply = client_.post(nlohmann::json{{"texts", std::vector<std::string>(texts.begin(), texts.end())}});
  if (!reply.is_object() || !reply.contains("vectors") || !reply.at("vectors").is_array())
    throw FormatError("embedding reply lacks a 'vectors' array");
  Rows out;
  for (const auto& row : reply.at("vectors")) {
    std::vector<double> v;
    for (const auto& x : row) {
      if (!x.is_number()) throw FormatError("embedding component is not a number");
      v.push_back(x.get<double>());
    }
    out.push_back(std::move(v));
  }
  return out;
}

void TopicConfig::validate(std::size_t embedding_dim) const {
  if (target_dim == 0 || target_dim > embedding_dim)
    throw ContractViolation("target_dim must be in [1, " + std::to_string(embedding_dim) + "]");
  if (min_cluster_size < 2) throw ContractViolation("min_cluster_size must be >= 2");
  if (top_n_terms == 0) throw ContractViolation("top_n_terms must be positive");
  if (window_days <= 0) throw ContractViolation("window_days must be positive");
}

// ---------------------------------------------------------------- reduction

Rows PcaReducer::reduce(const Rows& vectors, std::size_t target_dim, std::uint64_t) const {
  if (vectors.empty()) throw ContractViolation("cannot reduce an empty vector list");
  const std::size_t d = vectors.front().size();
  for (const auto& v : vectors)
    if (v.size() != d) throw ContractViolation("vectors have mixed dimensions");
  if (target_dim == 0 || target_dim > d) throw ContractViolation("target_dim exceeds input dimension");
  if (vectors.size() < 2) {
    log::warn("fewer than two vectors; dimensionality reduction skipped", {{"rows", vectors.size()}});
    return vectors;
  }
  if (target_dim == d) return vectors;

  const auto n = static_cast<Eigen::Index>(vectors.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) x(i, static_cast<Eigen::Index>(j)) = vectors[i][j];
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // Eigenvalues come back ascending.
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(target_dim));
  for (std::size_t k = 0; k < target_dim; ++k) {
    Eigen::VectorXd col = eig.eigenvectors().col(static_cast<Eigen::Index>(d - 1 - k));
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0) col = -col;
    basis.col(static_cast<Eigen::Index>(k)) = col;
  }
  const Eigen::MatrixXd projected = x * basis;
  Rows out(vectors.size(), std::vector<double>(target_dim));
  for (Eigen::Index i = 0; i < n; ++i)
    for (std::size_t k = 0; k < target_dim; ++k) out[i][k] = projected(i, static_cast<Eigen::Index>(k));
  return out;
}

// ---------------------------------------------------------------- clustering

namespace {

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

struct Merge {
  std::size_t left;
  std::size_t right;
  double dist;
  std::size_t size;
};

struct CondensedRow {
  std::size_t parent;  // condensed cluster id
  std::size_t child;   // point index (< n) or condensed cluster id (>= n)
  double lambda;
  std::size_t child_size;
};

double to_lambda(double d) { return 1.0 / std::max(d, 1e-12); }

}  // namespace

std::vector<int> DensityClusterer::cluster(const Rows& x, std::size_t mcs) const {
  const std::size_t n = x.size();
  std::vector<int> labels(n, -1);
  if (n == 0 || mcs < 2 || n < mcs) return labels;
  for (const auto& v : x)
    if (v.size() != x.front().size()) throw ContractViolation("vectors have mixed dimensions");

  // Core distances.
  std::vector<double> core(n);
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) row[j] = distance(x[i], x[j]);
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(mcs - 1), row.end());
    core[i] = row[mcs - 1];
  }
  auto mreach = [&](std::size_t a, std::size_t b) {
    return std::max({core[a], core[b], distance(x[a], x[b])});
  };

  // Prim's MST over mutual reachability.
  struct MstEdge {
    std::size_t a, b;
    double w;
  };
  std::vector<MstEdge> mst;
  mst.reserve(n - 1);
  std::vector<bool> in_tree(n, false);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> from(n, 0);
  std::size_t current = 0;
  in_tree[0] = true;
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t next = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double w = mreach(current, j);
      if (w < best[j]) {
        best[j] = w;
        from[j] = current;
      }
      if (next == n || best[j] < best[next]) next = j;
    }
    in_tree[next] = true;
    mst.push_back({std::min(from[next], next), std::max(from[next], next), best[next]});
    current = next;
  }
  std::stable_sort(mst.begin(), mst.end(), [](const MstEdge& l, const MstEdge& r) {
    if (l.w != r.w) return l.w < r.w;
    if (l.a != r.a) return l.a < r.a;
    return l.b < r.b;
  });

  // Single-linkage hierarchy; internal node ids n .. 2n-2.
  std::vector<std::size_t> parent(2 * n - 1);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  std::vector<Merge> merges;
  merges.reserve(n - 1);
  std::vector<std::size_t> node_size(2 * n - 1, 1);
  for (const auto& e : mst) {
    const auto ra = find(e.a);
    const auto rb = find(e.b);
    const std::size_t id = n + merges.size();
    node_size[id] = node_size[ra] + node_size[rb];
    merges.push_back({ra, rb, e.w, node_size[id]});
    parent[ra] = id;
    parent[rb] = id;
  }
  auto children = [&](std::size_t node) -> const Merge& { return merges[node - n]; };

  auto collect_points = [&](std::size_t node, std::vector<std::size_t>& out) {
    std::vector<std::size_t> stack{node};
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      if (v < n) {
        out.push_back(v);
      } else {
        stack.push_back(children(v).left);
        stack.push_back(children(v).right);
      }
    }
  };

  // Condense. Cluster ids start at n so they never collide with point ids.
  const std::size_t root = 2 * n - 2;
  std::vector<CondensedRow> tree;
  std::size_t next_cluster = n;
  std::vector<std::pair<std::size_t, std::size_t>> work{{root, next_cluster++}};  // (hierarchy node, cluster)
  std::vector<double> birth{0.0};                                                     // indexed by cluster - n
  while (!work.empty()) {
    auto [node, cid] = work.back();
    work.pop_back();
    const auto& m = children(node);
    const double lambda = to_lambda(m.dist);
    const auto lsize = node_size[m.left];
    const auto rsize = node_size[m.right];
    auto fall_out = [&](std::size_t sub) {
      std::vector<std::size_t> pts;
      collect_points(sub, pts);
      for (auto p : pts) tree.push_back({cid, p, lambda, 1});
    };
    auto continue_with = [&](std::size_t sub) {
      if (sub < n) {
        tree.push_back({cid, sub, lambda, 1});
      } else {
        work.push_back({sub, cid});
      }
    };
    if (lsize >= mcs && rsize >= mcs) {
      for (auto sub : {m.left, m.right}) {
        const std::size_t child = next_cluster++;
        birth.push_back(lambda);
        tree.push_back({cid, child, lambda, node_size[sub]});
        work.push_back({sub, child});
      }
    } else if (lsize < mcs && rsize < mcs) {
      fall_out(m.left);
      fall_out(m.right);
    } else if (lsize < mcs) {
      fall_out(m.left);
      continue_with(m.right);
    } else {
      fall_out(m.right);
      continue_with(m.left);
    }
  }

  // Stability and excess-of-mass selection.
  const std::size_t nclusters = next_cluster - n;
  std::vector<double> stability(nclusters, 0.0);
  std::vector<std::vector<std::size_t>> child_clusters(nclusters);
  std::vector<std::size_t> point_parent(n, root);
  for (const auto& r : tree) {
    stability[r.parent - n] += (r.lambda - birth[r.parent - n]) * static_cast<double>(r.child_size);
    if (r.child >= n) {
      child_clusters[r.parent - n].push_back(r.child - n);
    } else {
      point_parent[r.child] = r.parent;
    }
  }
  std::vector<bool> selected(nclusters, false);
  if (child_clusters[0].empty()) {
    selected[0] = true;
  } else {
    // Children always carry larger ids than their parent.
    for (std::size_t c = nclusters; c-- > 1;) {
      double sub = 0.0;
      for (auto k : child_clusters[c]) sub += stability[k];
      if (!child_clusters[c].empty() && sub > stability[c]) {
        stability[c] = sub;
      } else {
        selected[c] = true;
        std::vector<std::size_t> stack(child_clusters[c].begin(), child_clusters[c].end());
        while (!stack.empty()) {
          const auto k = stack.back();
          stack.pop_back();
          selected[k] = false;
          stack.insert(stack.end(), child_clusters[k].begin(), child_clusters[k].end());
        }
      }
    }
  }

  std::vector<std::size_t> cluster_parent(nclusters, 0);
  for (std::size_t c = 0; c < nclusters; ++c)
    for (auto k : child_clusters[c]) cluster_parent[k] = c;
  std::map<std::size_t, int> renumber;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = point_parent[i] - n;
    while (true) {
      if (selected[c]) {
        auto [it, fresh] = renumber.emplace(c, static_cast<int>(renumber.size()));
        labels[i] = it->second;
        break;
      }
      if (c == 0) break;
      c = cluster_parent[c];
    }
  }
  return labels;
}

// ---------------------------------------------------------------- c-TF-IDF

std::map<int, TermWeights> ctfidf(const std::map<int, TermCounts>& docs_by_class) {
  if (docs_by_class.empty()) throw ContractViolation("c-TF-IDF needs at least one class");
  std::map<std::string, std::uint64_t> total;
  std::uint64_t tokens = 0;
  for (const auto& [cls, counts] : docs_by_class) {
    for (const auto& [term, c] : counts) {
      total[term] += c;
      tokens += c;
    }
  }
  if (tokens == 0) throw ContractViolation("c-TF-IDF needs a nonempty vocabulary");
  const double avg = static_cast<double>(tokens) / static_cast<double>(docs_by_class.size());

  std::map<int, TermWeights> out;
  for (const auto& [cls, counts] : docs_by_class) {
    TermWeights w;
    for (const auto& [term, c] : counts) {
      if (c == 0) continue;
      w.emplace_back(term, static_cast<double>(c) * std::log(1.0 + avg / static_cast<double>(total[term])));
    }
    std::sort(w.begin(), w.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    out.emplace(cls, std::move(w));
  }
  return out;
}

// ---------------------------------------------------------------- tokenizer

TopicTokenizer::TopicTokenizer(std::set<std::string> stopwords) {
  for (const auto& s : stopwords) stopwords_.insert(text::case_fold(s));
}

TopicTokenizer TopicTokenizer::load(const std::filesystem::path& stopword_file) {
  std::ifstream in(stopword_file);
  if (!in) throw IoError("cannot read stopword file " + stopword_file.string());
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = text::trim(line);
    if (!t.empty() && t.front() != '#') words.insert(t);
  }
  return TopicTokenizer(std::move(words));
}

std::vector<std::string> TopicTokenizer::operator()(std::string_view s) const {
  std::vector<std::string> out;
  for (auto& tok : text::word_tokens(s)) {
    if (text::codepoint_count(tok) < 2 || stopwords_.count(tok) != 0) continue;
    out.push_back(std::move(tok));
  }
  return out;
}

// ---------------------------------------------------------------- window model

namespace {

TermWeights top_n(TermWeights w, std::size_t n) {
  if (w.size() > n) w.resize(n);
  return w;
}

}  // namespace

WindowModel model_window(std::span<const ClassifiedPost> posts, EmbeddingProvider& provider,
                         const TopicConfig& config, const TopicTokenizer& tokenizer, const Reducer& reducer,
                         const Clusterer& clusterer) {
  if (posts.empty()) throw ContractViolation("topic model needs at least one post");
  WindowModel model;
  model.assignments.assign(posts.size(), -1);
  if (posts.size() < config.min_cluster_size) return model;

  std::vector<std::string> texts;
  texts.reserve(posts.size());
  for (const auto& p : posts) texts.push_back(p.post.text);
  const Rows vectors = provider.embed(texts);
  if (vectors.size() != posts.size())
    throw FormatError("embedding provider returned " + std::to_string(vectors.size()) + " vectors for " +
                      std::to_string(posts.size()) + " texts");
  const std::size_t d = vectors.front().size();
  for (const auto& v : vectors)
    if (v.size() != d) throw FormatError("embedding provider returned vectors of mixed dimension");
  config.validate(d);

  const Rows reduced = reducer.reduce(vectors, config.target_dim, config.seed);
  model.assignments = clusterer.cluster(reduced, config.min_cluster_size);

  std::map<int, TermCounts> classes;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    if (model.assignments[i] < 0) continue;
    auto& counts = classes[model.assignments[i]];
    for (const auto& tok : tokenizer(posts[i].post.text)) ++counts[tok];
  }
  bool any_tokens = false;
  for (const auto& [cls, counts] : classes) any_tokens = any_tokens || !counts.empty();
  if (any_tokens) {
    for (auto& [cls, terms] : ctfidf(classes)) model.topic_terms[cls] = top_n(std::move(terms), config.top_n_terms);
  } else {
    for (const auto& [cls, counts] : classes) model.topic_terms[cls] = {};
  }
  return model;
}

void to_json(nlohmann::json& j, const TopicSnapshot& s) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [t, w] : s.terms) terms.push_back({t, w});
  j = nlohmann::json{{"day", s.day.iso()},   {"topic_id", s.topic_id}, {"size", s.size},
                     {"terms", terms},       {"doc_ids", s.doc_ids}};
}

void from_json(const nlohmann::json& j, TopicSnapshot& s) {
  s.day = Day::parse(j.at("day").get<std::string>());
  s.topic_id = j.at("topic_id").get<int>();
  s.size = j.at("size").get<std::size_t>();
  s.terms.clear();
  for (const auto& t : j.at("terms")) s.terms.emplace_back(t.at(0).get<std::string>(), t.at(1).get<double>());
  s.doc_ids = j.value("doc_ids", std::vector<std::string>{});
}

std::vector<TopicSnapshot> daily_snapshots(std::span<const int> assignments,
                                           std::span<const ClassifiedPost> posts,
                                           const TopicConfig& config, const TopicTokenizer& tokenizer) {
  if (assignments.size() != posts.size())
    throw ContractViolation("topic assignments do not cover the posts");
  std::set<Day> days;
  std::set<int> topics;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    days.insert(posts[i].post.day());
    if (assignments[i] >= 0) topics.insert(assignments[i]);
  }

  std::vector<TopicSnapshot> out;
  for (const auto& day : days) {
    std::map<int, TermCounts> classes;
    std::map<int, std::size_t> sizes;
    std::map<int, std::vector<std::string>> ids;
    for (std::size_t i = 0; i < posts.size(); ++i) {
      if (assignments[i] < 0 || posts[i].post.day() != day) continue;
      const int t = assignments[i];
      ++sizes[t];
      if (ids[t].size() < kSnapshotDocIds) ids[t].push_back(posts[i].post.id);
      auto& counts = classes[t];
      for (const auto& tok : tokenizer(posts[i].post.text)) ++counts[tok];
    }
    std::map<int, TermWeights> terms;
    bool any_tokens = false;
    for (const auto& [cls, counts] : classes) any_tokens = any_tokens || !counts.empty();
    if (any_tokens) terms = ctfidf(classes);
    for (int t : topics) {
      TopicSnapshot s;
      s.day = day;
      s.topic_id = t;
      s.size = sizes.count(t) ? sizes[t] : 0;
      if (auto it = terms.find(t); it != terms.end()) s.terms = top_n(it->second, config.top_n_terms);
      if (auto it = ids.find(t); it != ids.end()) s.doc_ids = it->second;
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace discourse
