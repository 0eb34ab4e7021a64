// Operator entry point: runs pipeline stages against a store and serves the API.
//
// Exit codes: 0 success, 1 stage error, 2 configuration error.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

#include "discourse/api.hpp"
#include "discourse/log.hpp"
#include "discourse/pipeline.hpp"

namespace {

using discourse::RunConfig;

struct Flags {
  std::string config;
  std::string store;
  std::optional<std::uint64_t> seed;
  bool dry_run = false;
  std::string backends;
  std::string input;
  std::string keywords;
  std::string from, to;
  std::optional<std::size_t> concurrency;
  std::string annotations;
  std::string predictions;
  std::string factcheck_fixtures;
  std::string listen;
  std::optional<int> port;
  bool verbose = false;
};

RunConfig build_config(const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig::defaults() : RunConfig::load(f.config);
  if (!f.store.empty()) c.store = f.store;
  if (f.seed) c.seed = *f.seed;
  c.dry_run = f.dry_run;
  if (!f.backends.empty()) c.backends = discourse::backend_set_from_string(f.backends);
  if (!f.input.empty()) c.input = f.input;
  if (!f.keywords.empty()) c.keywords = f.keywords;
  try {
    if (!f.from.empty()) c.from = discourse::Day::parse(f.from);
    if (!f.to.empty()) c.to = discourse::Day::parse(f.to);
  } catch (const discourse::ContractViolation& e) {
    throw discourse::ConfigError(e.what());
  }
  if (f.concurrency) c.concurrency = *f.concurrency;
  if (!f.annotations.empty()) c.annotations = f.annotations;
  if (!f.predictions.empty()) c.predictions = f.predictions;
  if (!f.factcheck_fixtures.empty()) c.factcheck_fixtures = f.factcheck_fixtures;
  if (!f.listen.empty()) c.server.listen_address = f.listen;
  if (f.port) c.server.port = *f.port;
  c.server.store_path = c.store;
  c.validate();
  return c;
}

discourse::ApiService* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int serve(const RunConfig& c) {
  if (!std::filesystem::exists(c.store / "manifest.json"))
    throw discourse::ConfigError("no store at " + c.store.string());
  discourse::ApiService service(discourse::Store::open(c.store), c.server);
  g_server = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  service.serve();
  g_server = nullptr;
  return 0;
}

void print(const discourse::StageReport& r) {
  std::cout << r.stage << ": " << r.counts.dump() << " item_errors=" << r.item_errors << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discourse monitoring pipeline and API server"};
  app.require_subcommand(1);
  Flags f;
  app.add_option("--config", f.config, "JSON run configuration");
  app.add_option("--store", f.store, "store directory");
  app.add_option("--seed", f.seed, "seed for every randomized step");
  app.add_flag("--dry-run", f.dry_run, "validate inputs without writing");
  app.add_option("--backends", f.backends, "backend set")->check(CLI::IsMember({"stub", "remote"}));
  app.add_option("--from", f.from, "first day of the window (YYYY-MM-DD)");
  app.add_option("--to", f.to, "last day of the window (YYYY-MM-DD)");
  app.add_option("--concurrency", f.concurrency, "concurrent backend calls");
  app.add_flag("-v,--verbose", f.verbose, "debug logging");

  auto* ingest = app.add_subcommand("ingest", "load, filter and store posts");
  ingest->add_option("--input", f.input, "posts file (.jsonl or .csv)");
  ingest->add_option("--keywords", f.keywords, "keyword file");
  app.add_subcommand("classify", "sentiment and hate labels");
  app.add_subcommand("topics", "topic model over the analysis window");
  app.add_subcommand("graph", "daily interaction graphs");
  auto* factcheck = app.add_subcommand("factcheck", "claim checking");
  factcheck->add_option("--fixtures", f.factcheck_fixtures, "directory with canned LLM replies and search results");
  auto* eval = app.add_subcommand("eval", "agreement and metrics against annotations");
  eval->add_option("--annotations", f.annotations, "annotation JSONL");
  eval->add_option("--predictions", f.predictions, "prediction JSONL (default: classified dataset)");
  auto* serve_cmd = app.add_subcommand("serve", "HTTP API over the store");
  serve_cmd->add_option("--listen", f.listen, "listen address");
  serve_cmd->add_option("--port", f.port, "port");
  auto* all = app.add_subcommand("run-all", "every stage in pipeline order");
  all->add_option("--input", f.input, "posts file (.jsonl or .csv)");
  all->add_option("--keywords", f.keywords, "keyword file");
  all->add_option("--annotations", f.annotations, "annotation JSONL");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (f.verbose) discourse::log::set_min_level(discourse::log::Level::debug);

  const auto cmd = app.get_subcommands().front()->get_name();
  try {
    const auto config = build_config(f);
    if (cmd == "serve") return serve(config);
    if (cmd == "run-all") {
      for (const auto& r : discourse::run_all(config)) print(r);
      return 0;
    }
    discourse::StageReport r;
    if (cmd == "ingest") r = discourse::run_ingest(config);
    else if (cmd == "classify") r = discourse::run_classify(config);
    else if (cmd == "topics") r = discourse::run_topics(config);
    else if (cmd == "graph") r = discourse::run_graph(config);
    else if (cmd == "factcheck") r = discourse::run_factcheck(config);
    else if (cmd == "eval") {
      r = discourse::run_eval(config);
      std::ifstream table(config.store / "reports" / "eval.txt");
      if (table && !config.dry_run) std::cout << table.rdbuf();
    }
    print(r);
    return 0;
  } catch (const discourse::ConfigError& e) {
    discourse::log::error("configuration error", {{"command", cmd}, {"error", e.what()}});
    return 2;
  } catch (const std::exception& e) {
    discourse::log::error("stage failed", {{"command", cmd}, {"error", e.what()}});
    return 1;
  }
}
