#pragma once

#include <chrono>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

namespace discourse {

/// Connection settings for a remote JSON service.
struct EndpointConfig {
  std::string url;  ///< e.g. "http://localhost:9000/v1/score"
  std::chrono::milliseconds timeout{30000};
  std::optional<std::string> bearer_token;

  static EndpointConfig from_json(const nlohmann::json& j);
};

/// Minimal JSON-over-HTTP client. Transport failures and non-2xx replies are
/// raised as RetryableError; an unparseable body raises FormatError.
class JsonHttpClient {
 public:
  explicit JsonHttpClient(EndpointConfig config);

  nlohmann::json post(const nlohmann::json& body) const;
  nlohmann::json get(const std::map<std::string, std::string>& query) const;

  const EndpointConfig& config() const { return config_; }

 private:
  EndpointConfig config_;
  std::string origin_;  ///< scheme://host[:port]
  std::string path_;
};

}  // namespace discourse
