#include "discourse/http_client.hpp"

#include <httplib.h>

#include "discourse/error.hpp"

namespace discourse {

EndpointConfig EndpointConfig::from_json(const nlohmann::json& j) {
  EndpointConfig c;
  c.url = j.at("url").get<std::string>();
  if (j.contains("timeout_ms")) c.timeout = std::chrono::milliseconds(j.at("timeout_ms").get<long>());
  if (j.contains("token") && j.at("token").is_string()) c.bearer_token = j.at("token").get<std::string>();
  return c;
}

JsonHttpClient::JsonHttpClient(EndpointConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.url.find("://");
  if (scheme_end == std::string::npos)
    throw ContractViolation("endpoint url lacks scheme: " + config_.url);
  const auto path_start = config_.url.find('/', scheme_end + 3);
  origin_ = config_.url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.url.substr(path_start);
}

namespace {

httplib::Client make_client(const std::string& origin, const EndpointConfig& cfg) {
  httplib::Client cli(origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg.timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());
  if (cfg.bearer_token) cli.set_bearer_token_auth(*cfg.bearer_token);
  return cli;
}

nlohmann::json parse_reply(const httplib::Result& res, const std::string& url) {
  if (!res) throw RetryableError("request to " + url + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw RetryableError("request to " + url + " returned HTTP " + std::to_string(res->status));
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("unparseable reply from " + url + ": " + e.what());
  }
}

}  // namespace

nlohmann::json JsonHttpClient::post(const nlohmann::json& body) const {
  auto cli = make_client(origin_, config_);
  auto res = cli.Post(path_, body.dump(), "application/json");
  return parse_reply(res, config_.url);
}

nlohmann::json JsonHttpClient::get(const std::map<std::string, std::string>& query) const {
  auto cli = make_client(origin_, config_);
  httplib::Params params(query.begin(), query.end());
  auto res = cli.Get(path_, params, httplib::Headers{});
  return parse_reply(res, config_.url);
}

}  // namespace discourse
