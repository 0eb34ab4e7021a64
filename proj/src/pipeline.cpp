#include "discourse/pipeline.hpp"

#include <fstream>
#include <set>

#include "discourse/corpus.hpp"
#include "discourse/eval.hpp"
#include "discourse/graph.hpp"
#include "discourse/log.hpp"
#include "discourse/records.hpp"

namespace discourse {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(BackendSet b) { return b == BackendSet::stub ? "stub" : "remote"; }

BackendSet backend_set_from_string(std::string_view s) {
  if (s == "stub") return BackendSet::stub;
  if (s == "remote") return BackendSet::remote;
  throw ConfigError("backends must be 'stub' or 'remote', got '" + std::string(s) + "'");
}

fs::path resource_dir() {
  if (const char* env = std::getenv("DISCOURSE_RESOURCES"); env && *env) return env;
  return DISCOURSE_RESOURCE_DIR;
}

RunConfig RunConfig::defaults() {
  const auto res = resource_dir();
  RunConfig c;
  c.store = "store";
  c.input = res / "fixtures" / "posts.jsonl";
  c.keywords = res / "fixtures" / "keywords_de.txt";
  c.sentiment_lexicon = res / "fixtures" / "lexicons" / "sentiment.json";
  c.hate_lexicon = res / "fixtures" / "lexicons" / "hate.json";
  c.gazetteer = res / "fixtures" / "gazetteer.json";
  c.stopwords = res / "fixtures" / "stopwords_de.txt";
  c.prompts = res / "prompts" / "v1";
  c.annotations = res / "fixtures" / "annotations.jsonl";
  return c;
}

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir, RunConfig c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  auto path = [&](const json& v) {
    fs::path p = v.get<std::string>();
    return p.is_absolute() ? p : base_dir / p;
  };
  try {
    if (j.contains("store")) c.store = path(j["store"]);
    if (j.contains("input")) c.input = path(j["input"]);
    if (j.contains("keywords")) c.keywords = path(j["keywords"]);
    if (j.contains("rejects")) c.rejects = path(j["rejects"]);
    if (j.contains("backends")) c.backends = backend_set_from_string(j["backends"].get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.concurrency = j.value("concurrency", c.concurrency);
    if (j.contains("window")) {
      const auto& w = j["window"];
      if (w.contains("from")) c.from = Day::parse(w["from"].get<std::string>());
      if (w.contains("to")) c.to = Day::parse(w["to"].get<std::string>());
    }
    if (j.contains("topics")) {
      const auto& t = j["topics"];
      c.topics.target_dim = t.value("target_dim", c.topics.target_dim);
      c.topics.min_cluster_size = t.value("min_cluster_size", c.topics.min_cluster_size);
      c.topics.top_n_terms = t.value("top_n_terms", c.topics.top_n_terms);
      c.topics.window_days = t.value("window_days", c.topics.window_days);
      c.embedding_dim = t.value("embedding_dim", c.embedding_dim);
    }
    if (j.contains("lexicons")) {
      const auto& l = j["lexicons"];
      if (l.contains("sentiment")) c.sentiment_lexicon = path(l["sentiment"]);
      if (l.contains("hate")) c.hate_lexicon = path(l["hate"]);
    }
    if (j.contains("gazetteer")) c.gazetteer = path(j["gazetteer"]);
    if (j.contains("stopwords")) c.stopwords = path(j["stopwords"]);
    if (j.contains("prompts")) c.prompts = path(j["prompts"]);
    if (j.contains("factcheck") && j["factcheck"].contains("fixtures"))
      c.factcheck_fixtures = path(j["factcheck"]["fixtures"]);
    if (j.contains("eval")) {
      const auto& e = j["eval"];
      if (e.contains("annotations")) {
        if (e["annotations"].is_null()) c.annotations.reset();
        else c.annotations = path(e["annotations"]);
      }
      if (e.contains("predictions")) c.predictions = path(e["predictions"]);
    }
    if (j.contains("remote"))
      for (const auto& [name, ep] : j["remote"].items()) c.remote[name] = EndpointConfig::from_json(ep);
    if (j.contains("server")) c.server = ApiConfig::from_json(j["server"], base_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + file.string() + ": " + e.what());
  }
  return from_json(j, fs::absolute(file).parent_path());
}

void RunConfig::validate() const {
  if (from && to && *to < *from) throw ConfigError("window 'from' is after 'to'");
  if (concurrency == 0) throw ConfigError("concurrency must be at least 1");
  if (topics.window_days < 1) throw ConfigError("topics.window_days must be at least 1");
  if (topics.top_n_terms < 1) throw ConfigError("topics.top_n_terms must be at least 1");
  if (embedding_dim < 1) throw ConfigError("topics.embedding_dim must be at least 1");
  try {
    topics.validate(backends == BackendSet::stub ? embedding_dim : topics.target_dim);
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  if (backends == BackendSet::remote) {
    for (const char* name : {"sentiment", "hate", "embedding"})
      if (!remote.count(name)) throw ConfigError(std::string("remote backend '") + name + "' is not configured");
    if (!factcheck_fixtures)
      for (const char* name : {"llm", "search"})
        if (!remote.count(name)) throw ConfigError(std::string("remote backend '") + name + "' is not configured");
  }
}

namespace {

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw ConfigError(what + " not found: " + p.string());
}

void require_dir(const fs::path& p, const std::string& what) {
  if (!fs::is_directory(p)) throw ConfigError(what + " not found: " + p.string());
}

// Stages after ingest need an existing store.
Store open_store(const RunConfig& c) {
  try {
    return Store::open(c.store);
  } catch (const NotFound&) {
    throw ConfigError("no store at " + c.store.string());
  }
}

std::vector<Day> days_in(const RunConfig& c, const Store& store, Dataset d) {
  std::vector<Day> out;
  for (auto day : store.days(d))
    if ((!c.from || *c.from <= day) && (!c.to || day <= *c.to)) out.push_back(day);
  return out;
}

template <typename T>
std::vector<T> load_as(const Store& store, Dataset d, Day day) {
  std::vector<T> out;
  for (const auto& r : store.get({d, day})) out.push_back(r.get<T>());
  return out;
}

template <typename T>
std::vector<json> to_records(const std::vector<T>& items) {
  std::vector<json> out;
  out.reserve(items.size());
  for (const auto& i : items) out.push_back(i);
  return out;
}

void log_item_errors(const std::string& stage, const std::vector<ItemError>& errors) {
  for (const auto& e : errors) log::warn("item failed", {{"stage", stage}, {"item", e.item_id}, {"error", e.message}});
}

StageReport finish(StageReport r) {
  json f = {{"stage", r.stage}, {"item_errors", r.item_errors}};
  for (const auto& [k, v] : r.counts.items()) f[k] = v;
  log::info("stage finished", f);
  return r;
}

}  // namespace

Backends Backends::create(const RunConfig& c) {
  Backends b;
  require_dir(c.prompts, "prompt directory");
  b.prompts = PromptSet::load(c.prompts);
  if (c.backends == BackendSet::stub) {
    require_file(c.sentiment_lexicon, "sentiment lexicon");
    require_file(c.hate_lexicon, "hate lexicon");
    b.sentiment = std::make_unique<LexiconBackend>(LexiconBackend::load(Capability::sentiment, c.sentiment_lexicon));
    b.hate = std::make_unique<LexiconBackend>(LexiconBackend::load(Capability::hate, c.hate_lexicon));
    b.translator = std::make_unique<IdentityTranslator>();
    b.embedder = std::make_unique<HashingEmbedder>(c.embedding_dim, c.seed);
    b.llm = std::make_unique<StubLlmClient>(b.prompts);
    b.search = std::make_unique<StubSearchClient>();
  } else {
    auto ep = [&](const std::string& name) -> const EndpointConfig& {
      auto it = c.remote.find(name);
      if (it == c.remote.end()) throw ConfigError("remote backend '" + name + "' is not configured");
      return it->second;
    };
    b.sentiment = std::make_unique<RemoteBackend>(Capability::sentiment, ep("sentiment"));
    b.hate = std::make_unique<RemoteBackend>(Capability::hate, ep("hate"));
    if (c.remote.count("translation")) b.translator = std::make_unique<RemoteTranslator>(ep("translation"));
    else b.translator = std::make_unique<IdentityTranslator>();
    b.embedder = std::make_unique<RemoteEmbedder>(ep("embedding"));
    if (!c.factcheck_fixtures) {
      b.llm = std::make_unique<RemoteLlmClient>(ep("llm"));
      b.search = std::make_unique<RemoteSearchClient>(ep("search"));
    }
  }
  if (c.factcheck_fixtures) {
    require_dir(*c.factcheck_fixtures, "fact-check fixture directory");
    b.llm = std::make_unique<MockLlmClient>(MockLlmClient::load(*c.factcheck_fixtures));
    b.search = std::make_unique<FixtureSearchClient>(FixtureSearchClient::load(*c.factcheck_fixtures));
  }
  return b;
}

StageReport run_ingest(const RunConfig& c) {
  c.validate();
  require_file(c.input, "input file");
  require_file(c.keywords, "keyword file");
  StageReport r{"ingest"};

  auto loaded = load_posts(c.input, format_for(c.input));
  const auto keywords = KeywordSet::load(c.keywords);
  auto kept = dedup(filter_by_keywords(loaded.posts, keywords));
  auto by_day = partition_by_day(kept);
  r.counts = {{"read", loaded.posts.size()},
              {"rejected", loaded.rejects.size()},
              {"kept", kept.size()},
              {"days", by_day.size()}};
  r.item_errors = loaded.rejects.size();
  if (c.dry_run) return finish(r);

  auto store = Store::open_or_create(c.store);
  write_rejects(c.rejects.value_or(c.store / "reports" / "ingest_rejects.jsonl"), loaded.rejects);
  for (const auto& [day, posts] : by_day) {
    // Re-ingesting merges with what is already stored for the day.
    std::vector<Post> merged;
    if (store.contains({Dataset::posts, day})) merged = load_as<Post>(store, Dataset::posts, day);
    merged.insert(merged.end(), posts.begin(), posts.end());
    store.put({Dataset::posts, day}, to_records(dedup(merged)));
  }
  return finish(r);
}

StageReport run_classify(const RunConfig& c) {
  c.validate();
  auto store = open_store(c);
  const auto days = days_in(c, store, Dataset::posts);
  StageReport r{"classify"};
  r.counts = {{"days", days.size()}, {"classified", 0}};
  if (c.dry_run) return finish(r);

  auto b = Backends::create(c);
  ClassifyOptions opt;
  opt.max_concurrency = c.concurrency;
  std::size_t classified = 0;
  for (auto day : days) {
    const auto posts = load_as<Post>(store, Dataset::posts, day);
    auto out = classify_posts(posts, *b.sentiment, *b.hate, *b.translator, opt);
    log_item_errors(r.stage, out.errors);
    r.item_errors += out.errors.size();
    classified += out.posts.size();
    store.put({Dataset::classified, day}, to_records(out.posts));
  }
  r.counts["classified"] = classified;
  return finish(r);
}

std::optional<std::pair<Day, Day>> topic_window(const RunConfig& c, const Store& store) {
  auto days = store.days(Dataset::classified);
  if (c.from && c.to) return std::pair{*c.from, *c.to};
  if (days.empty()) return std::nullopt;
  if (c.to) return std::pair{c.from.value_or(*c.to - (c.topics.window_days - 1)), *c.to};
  Day last = days.back();
  if (c.from) return std::pair{*c.from, std::max(*c.from, last)};
  return std::pair{last - (c.topics.window_days - 1), last};
}

StageReport run_topics(const RunConfig& c) {
  c.validate();
  auto store = open_store(c);
  StageReport r{"topics"};
  auto win = topic_window(c, store);
  std::vector<ClassifiedPost> posts;
  if (win)
    for (const auto& rec : store.query_range(Dataset::classified, win->first, win->second))
      posts.push_back(rec.get<ClassifiedPost>());
  r.counts = {{"posts", posts.size()}, {"topics", 0}, {"noise", 0}};
  if (win) {
    r.counts["from"] = win->first.iso();
    r.counts["to"] = win->second.iso();
  }
  if (c.dry_run || posts.empty()) return finish(r);

  require_file(c.stopwords, "stopword file");
  auto b = Backends::create(c);
  auto cfg = c.topics;
  cfg.seed = c.seed;
  const auto tokenizer = TopicTokenizer::load(c.stopwords);
  const auto model = model_window(posts, *b.embedder, cfg, tokenizer);
  const auto snaps = daily_snapshots(model.assignments, posts, cfg, tokenizer);

  std::map<Day, std::vector<json>> by_day;
  for (const auto& s : snaps) by_day[s.day].push_back(records::snapshot(s));
  for (std::size_t i = 0; i < posts.size(); ++i)
    by_day[posts[i].post.day()].push_back(records::assignment(posts[i].post.id, model.assignments[i]));
  for (const auto& [day, recs] : by_day) store.put({Dataset::topics, day}, recs);

  r.counts["topics"] = model.topic_terms.size();
  r.counts["noise"] = std::count(model.assignments.begin(), model.assignments.end(), -1);
  return finish(r);
}

StageReport run_graph(const RunConfig& c) {
  c.validate();
  auto store = open_store(c);
  const auto days = days_in(c, store, Dataset::classified);
  StageReport r{"graph"};
  r.counts = {{"days", days.size()}, {"nodes", 0}, {"edges", 0}};
  if (c.dry_run) return finish(r);

  require_file(c.gazetteer, "gazetteer");
  const auto recognizer = GazetteerRecognizer::load(c.gazetteer);
  const UrlProfileResolver resolver;

  // Topic labels come from the topic's most recent non-empty snapshot.
  std::map<int, std::string> labels;
  for (auto day : store.days(Dataset::topics)) {
    for (const auto& rec : store.get({Dataset::topics, day})) {
      if (!records::is_snapshot(rec)) continue;
      auto s = rec.get<TopicSnapshot>();
      if (s.terms.empty()) continue;
      std::string label;
      for (std::size_t i = 0; i < s.terms.size() && i < 3; ++i) label += (i ? ", " : "") + s.terms[i].first;
      labels[s.topic_id] = label;
    }
  }

  std::size_t nodes = 0, edges = 0;
  for (auto day : days) {
    const auto posts = load_as<ClassifiedPost>(store, Dataset::classified, day);
    std::map<std::string, int> assigned;
    if (store.contains({Dataset::topics, day}))
      for (const auto& rec : store.get({Dataset::topics, day}))
        if (records::is_assignment(rec)) assigned[rec.at("post_id").get<std::string>()] = rec.at("topic_id").get<int>();
    std::vector<int> topics;
    for (const auto& p : posts) {
      auto it = assigned.find(p.post.id);
      topics.push_back(it == assigned.end() ? -1 : it->second);
    }
    auto built = build_graph(posts, topics, recognizer, resolver, labels);
    log_item_errors(r.stage, built.skipped);
    r.item_errors += built.skipped.size();
    nodes += built.graph.node_count();
    edges += built.graph.edge_count();
    store.put({Dataset::graph, day}, records::graph(built.graph));
  }
  r.counts["nodes"] = nodes;
  r.counts["edges"] = edges;
  return finish(r);
}

StageReport run_factcheck(const RunConfig& c) {
  c.validate();
  auto store = open_store(c);
  const auto days = days_in(c, store, Dataset::posts);
  StageReport r{"factcheck"};
  r.counts = {{"days", days.size()}, {"records", 0}};
  if (c.dry_run) return finish(r);

  auto b = Backends::create(c);
  FactChecker checker(b.prompts, *b.llm, *b.search);
  std::size_t n = 0;
  for (auto day : days) {
    const auto posts = load_as<Post>(store, Dataset::posts, day);
    auto out = discourse::run_factcheck(posts, checker, c.concurrency);
    log_item_errors(r.stage, out.errors);
    r.item_errors += out.errors.size();
    n += out.records.size();
    store.put({Dataset::factcheck, day}, to_records(out.records));
  }
  r.counts["records"] = n;
  return finish(r);
}

StageReport run_eval(const RunConfig& c) {
  c.validate();
  StageReport r{"eval"};
  if (!c.annotations) {
    log::info("no annotation file configured, skipping evaluation");
    r.counts["skipped"] = true;
    return finish(r);
  }
  require_file(*c.annotations, "annotation file");
  const auto sets = eval::load_annotations(*c.annotations);

  std::map<eval::Task, std::map<std::string, std::string>> preds;
  std::map<eval::Task, std::string> model{{eval::Task::sentiment, "predictions"}, {eval::Task::hate, "predictions"}};
  if (c.predictions) {
    require_file(*c.predictions, "prediction file");
    preds = eval::load_predictions(*c.predictions);
  } else {
    auto store = open_store(c);
    for (auto day : store.days(Dataset::classified))
      for (const auto& cp : load_as<ClassifiedPost>(store, Dataset::classified, day)) {
        preds[eval::Task::sentiment][cp.post.id] = to_string(cp.sentiment.label);
        preds[eval::Task::hate][cp.post.id] = to_string(cp.hate.label);
        if (cp.backend_ids.size() >= 2) {
          model[eval::Task::sentiment] = cp.backend_ids[0];
          model[eval::Task::hate] = cp.backend_ids[1];
        }
      }
  }
  r.counts = {{"annotations", sets.size()}};
  if (c.dry_run) return finish(r);

  json report = json::object();
  std::vector<eval::TableRow> rows;
  for (auto task : {eval::Task::sentiment, eval::Task::hate}) {
    std::vector<eval::AnnotationSet> of_task;
    std::map<std::string, std::string> gold;
    for (const auto& a : sets)
      if (a.task == task) {
        of_task.push_back(a);
        gold[a.post_id] = eval::gold_label(a).label;
      }
    if (of_task.empty()) continue;
    const auto name = eval::to_string(task);
    const auto kappa = eval::fleiss_kappa(eval::vote_counts(of_task, task));
    json entry = {{"items", of_task.size()}, {"kappa", kappa.kappa}, {"kappa_degenerate", kappa.degenerate}};

    std::size_t overlap = 0;
    for (const auto& [id, _] : gold) overlap += preds[task].count(id);
    if (overlap == 0) {
      log::warn("no predictions overlap the annotations", {{"task", name}});
      entry["metrics"] = nullptr;
    } else {
      const auto mode = task == eval::Task::hate ? eval::MetricsMode::binary("hate") : eval::MetricsMode::macro();
      auto m = eval::precision_recall_f1(preds[task], gold, mode, eval::label_set(task));
      entry["metrics"] = eval::to_json(m);
      rows.push_back({name, model[task], std::move(m)});
    }
    report[name] = entry;
  }

  const auto dir = c.store / "reports";
  fs::create_directories(dir);
  std::ofstream(dir / "eval.json") << report.dump(2) << "\n";
  const auto table = eval::render_table(rows);
  std::ofstream(dir / "eval.txt") << table;
  r.counts["tasks"] = report.size();
  return finish(r);
}

std::vector<StageReport> run_all(const RunConfig& c) {
  std::vector<StageReport> out;
  out.push_back(run_ingest(c));
  if (c.dry_run) {
    // Later stages have nothing to read until ingest has written the store.
    if (!fs::exists(c.store / "manifest.json")) return out;
  }
  out.push_back(run_classify(c));
  out.push_back(run_topics(c));
  out.push_back(run_graph(c));
  out.push_back(run_factcheck(c));
  out.push_back(run_eval(c));
  return out;
}

}  // namespace discourse
