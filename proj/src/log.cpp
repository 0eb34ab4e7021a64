#include "discourse/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace discourse::log {
namespace {
std::atomic<Level> g_min{Level::info};
std::mutex g_mu;

const char* name(Level l) {
  switch (l) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
  }
  return "info";
}
}  // namespace

void set_min_level(Level level) { g_min = level; }

void event(Level level, std::string_view msg, const nlohmann::json& fields) {
  if (level < g_min.load()) return;
  nlohmann::json line = {{"level", name(level)}, {"msg", msg}};
  if (fields.is_object()) line.update(fields);
  const auto text = line.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  std::lock_guard lock(g_mu);
  std::fprintf(stderr, "%s\n", text.c_str());
}

}  // namespace discourse::log
