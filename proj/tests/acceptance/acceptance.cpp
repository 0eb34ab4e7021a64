// Acceptance gate: one PASS/FAIL line per primary criterion. Exit status is
// nonzero when any criterion fails.

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "discourse/api.hpp"
#include "discourse/eval.hpp"
#include "discourse/factcheck.hpp"
#include "discourse/graph.hpp"
#include "discourse/store.hpp"
#include "discourse/topics.hpp"
#include "support/corpora.hpp"
#include "support/graphs.hpp"
#include "support/metrics.hpp"
#include "support/schema_check.hpp"
#include "support/tempdir.hpp"

using namespace discourse;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kOracleTol = 1e-6;
constexpr double kAnalyticTol = 1e-9;
constexpr double kMetricTol = 1e-9;
constexpr double kCentralitySeconds = 10.0;
constexpr double kRunAllSeconds = 60.0;

/// Collects failures for one criterion; the first few are printed.
struct Outcome {
  std::vector<std::string> failures;
  std::string note;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x) {
  std::ostringstream ss;
  ss.precision(12);
  ss << x;
  return ss.str();
}

// ------------------------------------------------------------------ centrality

/// Connected weighted graph: random spanning tree plus extra random edges.
DiscourseGraph connected_graph(std::mt19937& rng, int count) {
  std::vector<std::tuple<int, int, std::uint64_t>> edges;
  for (int v = 1; v < count; ++v) edges.emplace_back(static_cast<int>(rng() % v), v, 1 + rng() % 9);
  const int extra = static_cast<int>(rng() % (2 * count + 1));
  for (int k = 0; k < extra; ++k) {
    const int a = static_cast<int>(rng() % count), b = static_cast<int>(rng() % count);
    if (a != b) edges.emplace_back(a, b, 1 + rng() % 9);
  }
  return testsupport::graph_from_edges(count, edges);
}

void check_analytic(Outcome& o, const std::string& name, const DiscourseGraph& g, const std::vector<double>& want) {
  const auto c = eigenvector_centrality(g);
  for (std::size_t i = 0; i < want.size(); ++i) {
    const double got = c.scores.at("actor:n" + std::to_string(i));
    o.expect(std::abs(got - want[i]) <= kAnalyticTol, name + " node " + std::to_string(i) + ": " + fmt(got) +
                                                          " vs " + fmt(want[i]));
  }
}

Outcome centrality() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937 rng(20240110);
  double worst = 0.0;
  for (int round = 0; round < 50; ++round) {
    const auto g = connected_graph(rng, 2 + static_cast<int>(rng() % 49));
    const auto c = eigenvector_centrality(g);
    o.expect(c.converged, "graph " + std::to_string(round) + " did not converge");
    for (const auto& [id, s] : testsupport::dense_centrality(g)) {
      const double diff = std::abs(c.scores.at(id) - s);
      worst = std::max(worst, diff);
      o.expect(diff <= kOracleTol, "graph " + std::to_string(round) + " " + id + " off by " + fmt(diff));
    }
  }
  const double r3 = 1.0 / std::sqrt(3.0), r6 = std::sqrt(6.0);
  check_analytic(o, "triangle", testsupport::graph_from_edges(3, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}}), {r3, r3, r3});
  check_analytic(o, "star", testsupport::graph_from_edges(4, {{0, 1, 1}, {0, 2, 1}, {0, 3, 1}}),
                 {std::sqrt(3.0) / r6, 1.0 / r6, 1.0 / r6, 1.0 / r6});
  check_analytic(o, "path", testsupport::graph_from_edges(3, {{0, 1, 1}, {1, 2, 1}}),
                 {0.5, std::sqrt(2.0) / 2.0, 0.5});
  const double secs = seconds_since(t0);
  o.expect(secs < kCentralitySeconds, "took " + fmt(secs) + " s");
  o.note = "max oracle deviation " + fmt(worst) + ", " + fmt(secs) + " s";
  return o;
}

// ------------------------------------------------------------------ graph

Outcome graph_exactness() {
  Outcome o;
  const auto fx = testsupport::load_graph_fixture(TEST_DATA_DIR "/graph_20.json");
  const auto out = build_graph(fx.posts, fx.topics, fx.gazetteer, UrlProfileResolver{});
  o.expect(out.skipped.empty(), "fixture posts were skipped");
  for (const auto& m : testsupport::graph_mismatches(out.graph, fx)) o.failures.push_back(m);

  std::mt19937 rng(1000);
  const auto rp = testsupport::random_posts(rng, 1000);
  const auto rnd = build_graph(rp.posts, rp.topics, rp.gazetteer, UrlProfileResolver{});
  std::map<EdgeKind, std::uint64_t> totals;
  for (const auto& e : rnd.graph.edges()) totals[e.kind] += e.weight;
  o.expect(totals[EdgeKind::intentional] == rp.expected_intentional, "intentional weight not conserved");
  o.expect(totals[EdgeKind::inferred] == rp.expected_inferred, "inferred weight not conserved");
  o.expect(totals[EdgeKind::passive_mutual] == rp.expected_passive, "co-mention pairs != sum of C(m,2)");
  o.note = std::to_string(fx.edges.size()) + " fixture edges, 1000 random posts";
  return o;
}

// ------------------------------------------------------------------ c-TF-IDF

double weight_of(const TermWeights& w, const std::string& term) {
  for (const auto& [t, x] : w)
    if (t == term) return x;
  return std::nan("");
}

Outcome ctfidf_weights() {
  Outcome o;
  const auto w = ctfidf({{0, {{"apple", 2}, {"banana", 1}}}, {1, {{"car", 2}, {"truck", 1}}}});
  const double apple = weight_of(w.at(0), "apple");
  o.expect(std::abs(apple - 2.0 * std::log(2.5)) <= kAnalyticTol, "W(apple) = " + fmt(apple));

  std::mt19937 rng(77);
  std::map<int, TermCounts> docs;
  for (int c = 0; c < 4; ++c)
    for (int t = 0; t < 12; ++t)
      if (rng() % 3) docs[c]["t" + std::to_string(t)] = 1 + rng() % 20;
  const auto base = ctfidf(docs);
  auto ranking = [](const TermWeights& tw) {
    std::vector<std::string> r;
    for (const auto& [t, x] : tw) r.push_back(t);
    return r;
  };
  for (int k = 0; k < 10; ++k) {
    const std::uint64_t factor = 2 + rng() % 50;
    auto scaled = docs;
    for (auto& [c, counts] : scaled)
      for (auto& [t, n] : counts) n *= factor;
    const auto sw = ctfidf(scaled);
    for (const auto& [c, terms] : base)
      o.expect(ranking(sw.at(c)) == ranking(terms), "ranking changed for class " + std::to_string(c) +
                                                        " under factor " + std::to_string(factor));
  }
  o.note = "W(apple) = " + fmt(apple);
  return o;
}

// ------------------------------------------------------------------ topic recovery

Outcome topic_recovery() {
  Outcome o;
  const auto corpus = testsupport::three_topic_corpus(30, 42);
  HashingEmbedder embedder(256, 0);
  const TopicConfig cfg;
  const auto model = model_window(corpus.posts, embedder, cfg, TopicTokenizer{});
  o.expect(model.topic_terms.size() == 3, std::to_string(model.topic_terms.size()) + " topics");
  for (const auto& [topic, terms] : model.topic_terms) {
    o.expect(terms.size() == 10, "topic " + std::to_string(topic) + " has " + std::to_string(terms.size()) + " terms");
    std::set<int> sources;
    for (const auto& [t, x] : terms) sources.insert(corpus.vocabulary_of.count(t) ? corpus.vocabulary_of.at(t) : -1);
    o.expect(sources.size() == 1 && *sources.begin() >= 0, "topic " + std::to_string(topic) + " mixes vocabularies");
  }
  std::map<std::string, std::uint64_t> non_noise, sums;
  for (std::size_t i = 0; i < corpus.posts.size(); ++i)
    if (model.assignments[i] >= 0) ++non_noise[Day::of(corpus.posts[i].post.published_at).iso()];
  for (const auto& s : daily_snapshots(model.assignments, corpus.posts, cfg, TopicTokenizer{}))
    sums[s.day.iso()] += s.size;
  o.expect(sums == non_noise, "per-day topic sizes do not sum to the non-noise counts");
  o.note = std::to_string(model.topic_terms.size()) + " topics over " + std::to_string(corpus.posts.size()) + " docs";
  return o;
}

// ------------------------------------------------------------------ metrics

Outcome metrics() {
  Outcome o;
  using namespace discourse::eval;
  for (const auto& f : testsupport::metrics_fixtures()) {
    const auto r = precision_recall_f1(f.preds, f.gold, f.mode, f.labels);
    o.expect(std::abs(r.precision - f.precision) <= kMetricTol, f.name + " precision " + fmt(r.precision));
    o.expect(std::abs(r.recall - f.recall) <= kMetricTol, f.name + " recall " + fmt(r.recall));
    o.expect(std::abs(r.f1 - f.f1) <= kMetricTol, f.name + " F1 " + fmt(r.f1));
  }
  const double kappa = fleiss_kappa({{2, 2}, {2, 2}}).kappa;
  o.expect(std::abs(kappa + 1.0 / 3.0) <= kMetricTol, "kappa " + fmt(kappa));

  const std::vector<std::optional<std::string>> breakers{std::nullopt, "hate", "normal"};
  int patterns = 0;
  for (unsigned mask = 0; mask < 16; ++mask) {
    std::vector<std::string> votes;
    for (int b = 0; b < 4; ++b) votes.push_back(mask >> b & 1 ? "hate" : "normal");
    for (const auto& tb : breakers) {
      std::optional<std::string> got;
      try {
        got = majority_vote(votes, tb);
      } catch (const ContractViolation&) {
      }
      o.expect(got == testsupport::brute_force_vote(votes, tb), "vote pattern " + std::to_string(mask));
      ++patterns;
    }
  }
  o.note = "kappa " + fmt(kappa) + ", " + std::to_string(patterns) + " vote cases";
  return o;
}

// ------------------------------------------------------------------ fact check

/// Counts calls per system prompt so the retry path is observable.
class CountingLlm final : public LlmClient {
 public:
  explicit CountingLlm(LlmClient& inner) : inner_(inner) {}
  std::string model_id() const override { return inner_.model_id(); }
  std::string complete(const std::string& system_prompt, const std::string& user_prompt) override {
    {
      std::lock_guard g(mu_);
      ++calls_[user_prompt];
    }
    return inner_.complete(system_prompt, user_prompt);
  }
  std::uint64_t max_calls() const {
    std::uint64_t m = 0;
    for (const auto& [k, n] : calls_) m = std::max(m, n);
    return m;
  }

 private:
  LlmClient& inner_;
  std::mutex mu_;
  std::map<std::string, std::uint64_t> calls_;
};

Outcome factcheck() {
  Outcome o;
  const std::filesystem::path dir = TEST_DATA_DIR "/factcheck";
  std::vector<Post> posts;
  {
    std::ifstream in(dir / "posts.jsonl");
    std::string line;
    while (std::getline(in, line)) posts.push_back(json::parse(line).get<Post>());
  }
  std::ifstream ein(dir / "expected.json");
  const auto expected = json::parse(ein);
  const auto prompts = PromptSet::load(RESOURCE_DIR "/prompts/v1");

  std::uint64_t retries_seen = 0;
  auto run = [&](std::size_t width) {
    auto mock = MockLlmClient::load(dir);
    CountingLlm llm(mock);
    auto search = FixtureSearchClient::load(dir);
    FactChecker fc(prompts, llm, search);
    auto out = run_factcheck(posts, fc, width);
    retries_seen = std::max(retries_seen, llm.max_calls());
    return out;
  };
  const auto a = run(1);
  const auto b = run(4);
  const auto c = run(1);
  const auto dump_a = json(a.records).dump();
  o.expect(dump_a == json(b.records).dump() && dump_a == json(c.records).dump(), "reruns are not byte-identical");

  const auto& want = expected.at("records");
  o.expect(a.records.size() == want.size(), std::to_string(a.records.size()) + " records");
  for (std::size_t i = 0; i < std::min(a.records.size(), want.size()); ++i) {
    const auto& r = a.records[i];
    const auto& e = want[i];
    const auto tag = r.claim.post_id + "#" + std::to_string(i);
    o.expect(r.claim.post_id == e.at("post_id").get<std::string>(), tag + " post id");
    o.expect(r.channel == e.at("channel").get<std::string>(), tag + " channel");
    o.expect(r.query == e.at("query").get<std::string>(), tag + " query");
    o.expect(r.evidence_summaries.size() == e.at("summaries").get<std::size_t>(), tag + " summaries");
    o.expect(r.evidence_summaries.size() <= 3, tag + " more than three summaries");
    o.expect(to_string(r.verdict.category) == e.at("category").get<std::string>(), tag + " category");
    o.expect(truthfulness_from_string(to_string(r.verdict.category)).has_value(), tag + " category outside set");
  }
  std::set<std::string> failed;
  for (const auto& err : a.errors) failed.insert(err.item_id);
  std::set<std::string> want_failed;
  for (const auto& id : expected.at("failed_posts")) want_failed.insert(id.get<std::string>());
  o.expect(failed == want_failed, "failed posts differ");

  // Posts whose first LLM reply is malformed still yield records.
  std::set<std::string> with_records;
  for (const auto& r : a.records) with_records.insert(r.claim.post_id);
  o.expect(with_records.count("f04") && with_records.count("f10"), "retry path produced no records");
  o.expect(retries_seen >= 2, "no prompt was retried");

  const auto hist = verdict_histogram(a.records);
  std::map<std::string, std::uint64_t> per_channel;
  for (const auto& r : a.records) ++per_channel[r.channel];
  for (const auto& [channel, counts] : hist) {
    std::uint64_t sum = 0;
    for (auto n : counts) sum += n;
    o.expect(sum == per_channel[channel], "histogram for " + channel + " sums to " + std::to_string(sum));
  }
  o.note = std::to_string(a.records.size()) + " records, " + std::to_string(a.errors.size()) + " failed post";
  return o;
}

// ------------------------------------------------------------------ end to end

int run_cli(const std::string& args, std::string& output) {
  const std::string cmd = std::string(CLI_PATH) + " " + args + " 2>&1";
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return -1;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) output.append(buf.data(), n);
  const int status = ::pclose(p);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().string().find(".locks") == std::string::npos)
      out[std::filesystem::relative(e.path(), root).string()] = testsupport::read_file(e.path());
  return out;
}

Outcome end_to_end() {
  Outcome o;
  testsupport::TempDir dir;
  double slowest = 0.0;
  for (const char* name : {"a", "b"}) {
    std::string output;
    const auto t0 = Clock::now();
    const int code = run_cli("--backends stub --store '" + (dir / name).string() + "' run-all", output);
    const double secs = seconds_since(t0);
    slowest = std::max(slowest, secs);
    o.expect(code == 0, std::string("run ") + name + " exited " + std::to_string(code) + ": " + output);
    o.expect(secs < kRunAllSeconds, std::string("run ") + name + " took " + fmt(secs) + " s");
  }
  if (!o.failures.empty()) return o;
  const auto ta = tree(dir / "a");
  o.expect(!ta.empty() && ta == tree(dir / "b"), "stores differ between runs");

  auto store = Store::open(dir / "a");
  ApiService svc(store, ApiConfig{});
  auto schema = [](const std::string& name) {
    return testsupport::SchemaCheck::load(std::string(SCHEMA_DIR) + "/" + name + ".schema.json");
  };
  int endpoints = 0;
  auto probe = [&](const std::string& path, std::multimap<std::string, std::string> params, const std::string& sch,
                   int status) {
    ApiRequest req;
    req.path = path;
    req.params = std::move(params);
    const auto r = svc.handle(req);
    o.expect(r.status == status, path + " returned " + std::to_string(r.status));
    for (const auto& e : schema(sch).errors(r.body)) o.failures.push_back(path + ": " + e);
    ++endpoints;
    return r;
  };
  const auto topic_days = store.days(Dataset::topics);
  o.expect(!topic_days.empty(), "no topic partitions");
  const auto day = topic_days.empty() ? std::string("2024-01-01") : topic_days.back().iso();

  probe("/api/v1/health", {}, "health", 200);
  probe("/api/v1/trends/sentiment", {}, "trends", 200);
  probe("/api/v1/trends/hate", {{"granularity", "week"}}, "trends", 200);
  const auto topics = probe("/api/v1/topics", {{"day", day}}, "topics", 200);
  o.expect(topics.body.is_array() && !topics.body.empty(), "no topics on " + day);
  probe("/api/v1/topics/evolution", {}, "topic_evolution", 200);
  const auto graph = probe("/api/v1/graph", {}, "graph", 200);
  o.expect(graph.body.contains("nodes") && !graph.body["nodes"].empty(), "empty graph");
  probe("/api/v1/factcheck/verdicts", {}, "verdicts", 200);
  probe("/api/v1/topics", {}, "error", 400);
  probe("/api/v1/nope", {}, "error", 404);
  o.note = std::to_string(ta.size()) + " store files, slowest run " + fmt(slowest) + " s, " +
           std::to_string(endpoints) + " responses validated";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"centrality-oracle", centrality},
      {"graph-exactness", graph_exactness},
      {"ctfidf-weights", ctfidf_weights},
      {"topic-recovery", topic_recovery},
      {"metrics", metrics},
      {"factcheck-determinism", factcheck},
      {"end-to-end", end_to_end},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.failures.push_back(std::string("exception: ") + e.what());
    }
    if (o.failures.empty()) {
      std::cout << "PASS " << name << " (" << o.note << ")\n";
    } else {
      ++failed;
      std::cout << "FAIL " << name << ": " << o.failures.size() << " problem(s)\n";
      for (std::size_t i = 0; i < std::min<std::size_t>(o.failures.size(), 10); ++i)
        std::cout << "    " << o.failures[i] << "\n";
    }
    std::cout.flush();
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << criteria.size() - failed << "/" << criteria.size() << "\n";
  return failed ? 1 : 0;
}
