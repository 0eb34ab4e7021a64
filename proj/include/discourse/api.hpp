#pragma once

#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "discourse/store.hpp"

namespace httplib {
class Server;
}

namespace discourse {

struct ApiConfig {
  std::string listen_address = "127.0.0.1";
  int port = 8080;
  std::filesystem::path store_path;
  std::size_t cache_size = 32;
  std::vector<std::string> cors_origins;   ///< "*" allows any origin
  std::optional<std::string> bearer_token; ///< when set, requests must carry it

  /// Keys: listen_address, port, store, cache_size, cors_origins, bearer_token.
  static ApiConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
};

struct ApiRequest {
  std::string method = "GET";
  std::string path;
  std::multimap<std::string, std::string> params;
  std::map<std::string, std::string> headers;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
  std::map<std::string, std::string> headers;
};

inline constexpr std::size_t kDefaultPageLimit = 100;

/// Read-only /api/v1 endpoints over a store:
///   GET /api/v1/health
///   GET /api/v1/trends/{sentiment|hate}?from&to&platform&granularity
///   GET /api/v1/topics?day&limit&offset
///   GET /api/v1/topics/evolution?from&to&topic_ids
///   GET /api/v1/graph?from&to&min_occurrence&top_k&kinds
///   GET /api/v1/factcheck/verdicts?channel&from&to&limit&offset
/// Errors carry {"error": {"status", "code", "message"}}.
class ApiService {
 public:
  ApiService(Store store, ApiConfig config);
  ~ApiService();

  ApiResponse handle(const ApiRequest& request) const;

  /// Binds and serves on a background thread; returns the bound port
  /// (config.port, or an ephemeral one when it is 0).
  int start();
  /// Blocks serving in the calling thread until stop().
  void serve();
  void stop();

 private:
  ApiResponse route(const ApiRequest& request) const;
  ApiResponse trends(const ApiRequest& r, const std::string& metric) const;
  ApiResponse topics(const ApiRequest& r) const;
  ApiResponse topic_evolution(const ApiRequest& r) const;
  ApiResponse graph(const ApiRequest& r) const;
  ApiResponse verdicts(const ApiRequest& r) const;
  void install_routes();
  int bind();

  Store store_;
  ApiConfig config_;

  struct Cache {
    std::mutex mu;
    std::list<std::pair<std::string, nlohmann::json>> entries;  // most recent first
  };
  std::unique_ptr<Cache> cache_;
  std::unique_ptr<httplib::Server> server_;
  std::unique_ptr<std::thread> thread_;
};

}  // namespace discourse
