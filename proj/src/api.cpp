#include "discourse/api.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>
#include <set>

#include "discourse/classify.hpp"
#include "discourse/error.hpp"
#include "discourse/factcheck.hpp"
#include "discourse/graph.hpp"
#include "discourse/log.hpp"
#include "discourse/records.hpp"
#include "discourse/topics.hpp"

namespace discourse {

namespace {

using nlohmann::json;

// Raised by handlers to produce an error body.
struct HttpError {
  int status;
  std::string code;
  std::string message;
};

HttpError bad_request(std::string msg) { return {400, "bad_request", std::move(msg)}; }

ApiResponse error_response(const HttpError& e) {
  return {e.status, {{"error", {{"status", e.status}, {"code", e.code}, {"message", e.message}}}}, {}};
}

std::optional<std::string> param(const ApiRequest& r, const std::string& name) {
  auto it = r.params.find(name);
  if (it == r.params.end()) return std::nullopt;
  return it->second;
}

std::optional<Day> day_param(const ApiRequest& r, const std::string& name) {
  auto v = param(r, name);
  if (!v) return std::nullopt;
  try {
    return Day::parse(*v);
  } catch (const ContractViolation&) {
    throw bad_request("invalid date for '" + name + "': " + *v);
  }
}

std::optional<std::uint64_t> uint_param(const ApiRequest& r, const std::string& name) {
  auto v = param(r, name);
  if (!v) return std::nullopt;
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (v->empty() || ec != std::errc{} || p != v->data() + v->size())
    throw bad_request("'" + name + "' must be a non-negative integer");
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto comma = s.find(',', start);
    if (comma == std::string::npos) comma = s.size();
    if (comma > start) out.push_back(s.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

// Resolves from/to against the days stored for `dataset`; an open bound
// takes the first or last stored day.
std::optional<std::pair<Day, Day>> window(const ApiRequest& r, const Store& store, Dataset dataset) {
  auto from = day_param(r, "from");
  auto to = day_param(r, "to");
  if (from && to && *to < *from) throw bad_request("'from' must not be after 'to'");
  if (from && to) return std::pair{*from, *to};
  auto days = store.days(dataset);
  if (days.empty()) return std::nullopt;
  return std::pair{from.value_or(days.front()), to.value_or(days.back())};
}

std::pair<std::size_t, std::size_t> page(const ApiRequest& r) {
  return {uint_param(r, "limit").value_or(kDefaultPageLimit), uint_param(r, "offset").value_or(0)};
}

template <typename T>
std::vector<T> slice(const std::vector<T>& v, std::pair<std::size_t, std::size_t> pg) {
  auto [limit, offset] = pg;
  if (offset >= v.size()) return {};
  auto end = offset + std::min(limit, v.size() - offset);
  return {v.begin() + static_cast<std::ptrdiff_t>(offset), v.begin() + static_cast<std::ptrdiff_t>(end)};
}

}  // namespace

ApiConfig ApiConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  ApiConfig c;
  try {
    c.listen_address = j.value("listen_address", c.listen_address);
    c.port = j.value("port", c.port);
    if (j.contains("store")) {
      std::filesystem::path p = j.at("store").get<std::string>();
      c.store_path = p.is_absolute() ? p : base_dir / p;
    }
    c.cache_size = j.value("cache_size", c.cache_size);
    c.cors_origins = j.value("cors_origins", c.cors_origins);
    if (j.contains("bearer_token") && !j.at("bearer_token").is_null())
      c.bearer_token = j.at("bearer_token").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("server config: ") + e.what());
  }
  if (c.port < 0 || c.port > 65535) throw FormatError("server config: port out of range");
  return c;
}

ApiService::ApiService(Store store, ApiConfig config)
    : store_(std::move(store)), config_(std::move(config)), cache_(std::make_unique<Cache>()) {}

ApiService::~ApiService() { stop(); }

ApiResponse ApiService::handle(const ApiRequest& request) const {
  ApiResponse resp;
  if (config_.bearer_token) {
    auto it = request.headers.find("Authorization");
    if (it == request.headers.end() || it->second != "Bearer " + *config_.bearer_token)
      resp = error_response({401, "unauthorized", "missing or invalid bearer token"});
  }
  if (resp.body.is_null()) {
    try {
      resp = route(request);
    } catch (const HttpError& e) {
      resp = error_response(e);
    } catch (const std::exception& e) {
      log::error("request failed", {{"path", request.path}, {"error", e.what()}});
      resp = error_response({500, "internal", e.what()});
    }
  }

  if (!config_.cors_origins.empty()) {
    const auto& origins = config_.cors_origins;
    auto origin = request.headers.find("Origin");
    if (std::find(origins.begin(), origins.end(), "*") != origins.end()) {
      resp.headers["Access-Control-Allow-Origin"] = "*";
    } else if (origin != request.headers.end() &&
               std::find(origins.begin(), origins.end(), origin->second) != origins.end()) {
      resp.headers["Access-Control-Allow-Origin"] = origin->second;
      resp.headers["Vary"] = "Origin";
    }
    if (resp.headers.count("Access-Control-Allow-Origin")) {
      resp.headers["Access-Control-Allow-Methods"] = "GET, OPTIONS";
      resp.headers["Access-Control-Allow-Headers"] = "Authorization, Content-Type";
    }
  }
  return resp;
}

ApiResponse ApiService::route(const ApiRequest& r) const {
  static const std::string prefix = "/api/v1";
  if (r.method != "GET") throw HttpError{404, "not_found", "no route for " + r.method + " " + r.path};
  if (r.path.rfind(prefix, 0) != 0) throw HttpError{404, "not_found", "no route for " + r.path};
  const auto sub = r.path.substr(prefix.size());

  if (sub == "/health") return {200, {{"status", "ok"}, {"schema_version", kSchemaVersion}}, {}};
  if (sub.rfind("/trends/", 0) == 0) {
    auto metric = sub.substr(8);
    if (metric != "sentiment" && metric != "hate")
      throw HttpError{404, "not_found", "unknown metric '" + metric + "'"};
    return trends(r, metric);
  }
  if (sub == "/topics") return topics(r);
  if (sub == "/topics/evolution") return topic_evolution(r);
  if (sub == "/graph") return graph(r);
  if (sub == "/factcheck/verdicts") return verdicts(r);
  throw HttpError{404, "not_found", "no route for " + r.path};
}

ApiResponse ApiService::trends(const ApiRequest& r, const std::string& metric) const {
  const auto granularity = param(r, "granularity").value_or("day");
  if (granularity != "day" && granularity != "week")
    throw bad_request("granularity must be 'day' or 'week'");
  const auto platform = param(r, "platform");
  const bool weekly = granularity == "week";

  std::vector<std::string> labels;
  if (metric == "sentiment") {
    for (auto l : {SentimentLabel::positive, SentimentLabel::negative, SentimentLabel::neutral})
      labels.push_back(to_string(l));
  } else {
    for (auto l : {HateLabel::hate, HateLabel::normal}) labels.push_back(to_string(l));
  }

  json body = {{"metric", metric}, {"granularity", granularity}, {"points", json::array()}};
  auto win = window(r, store_, Dataset::classified);
  if (!win) return {200, body, {}};

  std::map<Day, std::map<std::string, std::uint64_t>> periods;
  for (const auto& rec : store_.query_range(Dataset::classified, win->first, win->second)) {
    auto cp = rec.get<ClassifiedPost>();
    if (platform && cp.post.platform != *platform) continue;
    Day period = weekly ? cp.post.day().week_start() : cp.post.day();
    auto& counts = periods[period];
    if (counts.empty())
      for (const auto& l : labels) counts[l] = 0;
    ++counts[metric == "sentiment" ? to_string(cp.sentiment.label) : to_string(cp.hate.label)];
  }
  for (const auto& [period, counts] : periods) {
    std::uint64_t total = 0;
    for (const auto& [_, n] : counts) total += n;
    body["points"].push_back({{"period", period.iso()}, {"counts", counts}, {"total", total}});
  }
  return {200, body, {}};
}

ApiResponse ApiService::topics(const ApiRequest& r) const {
  auto day = day_param(r, "day");
  if (!day) throw bad_request("'day' is required");
  const auto pg = page(r);

  std::vector<TopicSnapshot> snaps;
  if (store_.contains({Dataset::topics, *day}))
    for (const auto& rec : store_.get({Dataset::topics, *day}))
      if (records::is_snapshot(rec)) snaps.push_back(rec.get<TopicSnapshot>());
  std::stable_sort(snaps.begin(), snaps.end(), [](const TopicSnapshot& a, const TopicSnapshot& b) {
    return a.size != b.size ? a.size > b.size : a.topic_id < b.topic_id;
  });

  json items = json::array();
  for (const auto& s : slice(snaps, pg)) items.push_back(s);
  return {200, items, {{"X-Total-Count", std::to_string(snaps.size())}}};
}

ApiResponse ApiService::topic_evolution(const ApiRequest& r) const {
  std::optional<std::set<int>> wanted;
  if (auto ids = param(r, "topic_ids")) {
    wanted.emplace();
    for (const auto& s : split_list(*ids)) {
      int v = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || p != s.data() + s.size()) throw bad_request("topic_ids must be integers");
      wanted->insert(v);
    }
  }

  std::map<int, json> series;
  if (wanted)
    for (int id : *wanted) series[id] = json::array();
  json body = {{"series", json::array()}};
  if (auto win = window(r, store_, Dataset::topics)) {
    body["from"] = win->first.iso();
    body["to"] = win->second.iso();
    for (const auto& rec : store_.query_range(Dataset::topics, win->first, win->second)) {
      if (!records::is_snapshot(rec)) continue;
      const int id = rec.at("topic_id").get<int>();
      if (wanted && !wanted->count(id)) continue;
      auto& pts = series[id];
      if (pts.is_null()) pts = json::array();
      pts.push_back({{"day", rec.at("day")}, {"size", rec.at("size")}});
    }
  }
  for (auto& [id, pts] : series) body["series"].push_back({{"topic_id", id}, {"points", pts}});
  return {200, body, {}};
}

ApiResponse ApiService::graph(const ApiRequest& r) const {
  ViewFilter filter;
  filter.min_occurrence = uint_param(r, "min_occurrence").value_or(0);
  if (auto k = uint_param(r, "top_k")) filter.top_k = *k;
  if (auto kinds = param(r, "kinds")) {
    filter.kinds.clear();
    for (const auto& k : split_list(*kinds)) {
      try {
        filter.kinds.insert(node_kind_from_string(k));
      } catch (const Error&) {
        throw bad_request("unknown node kind '" + k + "'");
      }
    }
  }

  auto win = window(r, store_, Dataset::graph);
  if (!win) return {200, {{"nodes", json::array()}, {"edges", json::array()}}, {}};

  // The key covers the stored content so a rewritten partition invalidates it.
  std::string key = win->first.iso() + "|" + win->second.iso() + "|" + std::to_string(filter.min_occurrence) +
                    "|" + (filter.top_k ? std::to_string(*filter.top_k) : "-") + "|";
  for (auto k : filter.kinds) key += to_string(k) + ",";
  const auto manifest = store_.manifest();
  if (auto it = manifest.datasets.find(Dataset::graph); it != manifest.datasets.end())
    for (const auto& [day, entry] : it->second)
      if (win->first <= day && day <= win->second) key += "|" + entry.digest;

  {
    std::lock_guard lock(cache_->mu);
    auto& entries = cache_->entries;
    for (auto it = entries.begin(); it != entries.end(); ++it) {
      if (it->first == key) {
        entries.splice(entries.begin(), entries, it);
        return {200, entries.front().second, {}};
      }
    }
  }

  const auto recs = store_.query_range(Dataset::graph, win->first, win->second);
  const auto view = filter_view(records::graph_from(recs), filter);
  const auto centrality = eigenvector_centrality(view);
  if (!centrality.converged)
    log::warn("centrality did not converge", {{"iterations", centrality.iterations}});
  json body = to_node_link(view, &centrality.scores);

  if (config_.cache_size > 0) {
    std::lock_guard lock(cache_->mu);
    auto& entries = cache_->entries;
    entries.emplace_front(key, body);
    while (entries.size() > config_.cache_size) entries.pop_back();
  }
  return {200, body, {}};
}

ApiResponse ApiService::verdicts(const ApiRequest& r) const {
  const auto channel = param(r, "channel");
  const auto pg = page(r);

  std::vector<FactCheckRecord> recs;
  if (auto win = window(r, store_, Dataset::factcheck))
    for (const auto& rec : store_.query_range(Dataset::factcheck, win->first, win->second)) {
      auto fc = rec.get<FactCheckRecord>();
      if (!channel || fc.channel == *channel) recs.push_back(std::move(fc));
    }

  const auto hist = verdict_histogram(recs);
  VerdictCounts all{};
  std::vector<json> per_channel;
  for (const auto& [name, counts] : hist) {
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      all[i] += counts[i];
      total += counts[i];
    }
    per_channel.push_back({{"channel", name}, {"counts", verdict_counts_json(counts)}, {"total", total}});
  }
  std::uint64_t total = 0;
  for (auto n : all) total += n;

  json body = {{"channel", channel ? json(*channel) : json(nullptr)},
               {"counts", verdict_counts_json(all)},
               {"total", total},
               {"channels", slice(per_channel, pg)}};
  return {200, body, {{"X-Total-Count", std::to_string(per_channel.size())}}};
}

void ApiService::install_routes() {
  auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest ar;
    ar.method = req.method;
    ar.path = req.path;
    for (const auto& [k, v] : req.params) ar.params.emplace(k, v);
    for (const auto& [k, v] : req.headers) ar.headers[k] = v;
    ApiResponse out;
    if (req.method == "OPTIONS") {
      // Preflight: answer with the CORS headers only.
      ar.method = "GET";
      ar.path = "/api/v1/health";
      out = handle(ar);
      out.status = 204;
      out.body = nullptr;
    } else {
      out = handle(ar);
    }
    res.status = out.status;
    for (const auto& [k, v] : out.headers) res.set_header(k, v);
    if (!out.body.is_null()) res.set_content(out.body.dump(), "application/json");
    log::info("request", {{"method", req.method}, {"path", req.path}, {"status", out.status}});
  };
  server_->Get(".*", dispatch);
  server_->Options(".*", dispatch);
  server_->Post(".*", dispatch);
}

int ApiService::bind() {
  if (server_) throw ContractViolation("server already started");
  server_ = std::make_unique<httplib::Server>();
  install_routes();
  int port = config_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(config_.listen_address);
  } else if (!server_->bind_to_port(config_.listen_address, port)) {
    port = -1;
  }
  if (port < 0) {
    server_.reset();
    throw IoError("cannot bind " + config_.listen_address + ":" + std::to_string(config_.port));
  }
  log::info("listening", {{"address", config_.listen_address}, {"port", port}});
  return port;
}

int ApiService::start() {
  const int port = bind();
  thread_ = std::make_unique<std::thread>([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void ApiService::serve() {
  bind();
  server_->listen_after_bind();
}

void ApiService::stop() {
  if (server_) server_->stop();
  if (thread_ && thread_->joinable() && thread_->get_id() != std::this_thread::get_id()) thread_->join();
  thread_.reset();
  server_.reset();
}

}  // namespace discourse
