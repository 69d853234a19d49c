#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace pa::log {

enum class Level : int { error = 0, warn = 1, info = 2, debug = 3 };

/// Reads PA_LOG_LEVEL once (error|warn|info|debug); unset or unknown -> warn.
inline Level threshold() {
  static const Level lvl = [] {
    const char* env = std::getenv("PA_LOG_LEVEL");
    if (env == nullptr) return Level::warn;
    if (std::strcmp(env, "error") == 0) return Level::error;
    if (std::strcmp(env, "warn") == 0) return Level::warn;
    if (std::strcmp(env, "info") == 0) return Level::info;
    if (std::strcmp(env, "debug") == 0) return Level::debug;
    return Level::warn;
  }();
  return lvl;
}

inline void write(Level lvl, const std::string& msg) {
  if (static_cast<int>(lvl) > static_cast<int>(threshold())) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "[pa:%s] %s\n", names[static_cast<int>(lvl)], msg.c_str());
}

inline void error(const std::string& msg) { write(Level::error, msg); }
inline void warn(const std::string& msg) { write(Level::warn, msg); }
inline void info(const std::string& msg) { write(Level::info, msg); }
inline void debug(const std::string& msg) { write(Level::debug, msg); }

}  // namespace pa::log
