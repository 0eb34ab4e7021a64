#pragma once

#include <nlohmann/json.hpp>
#include <string_view>

namespace discourse::log {

enum class Level { debug, info, warn, error };

/// Emits one JSON object per line on stderr: {"level", "msg", ...fields}.
void event(Level level, std::string_view msg, const nlohmann::json& fields = nlohmann::json::object());

inline void info(std::string_view msg, const nlohmann::json& f = nlohmann::json::object()) { event(Level::info, msg, f); }
inline void warn(std::string_view msg, const nlohmann::json& f = nlohmann::json::object()) { event(Level::warn, msg, f); }
inline void error(std::string_view msg, const nlohmann::json& f = nlohmann::json::object()) { event(Level::error, msg, f); }

/// Messages below `level` are dropped. Defaults to info.
void set_min_level(Level level);

}  // namespace discourse::log
