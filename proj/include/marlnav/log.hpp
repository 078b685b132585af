#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace marlnav::logging {

enum class Level { error = 0, info = 1, debug = 2 };

/// Log verbosity, controlled by the MARL_NAV_LOG environment variable
/// (one of: error, info, debug). Defaults to info.
inline Level level() {
  static Level lvl = [] {
    const char* v = std::getenv("MARL_NAV_LOG");
    if (v == nullptr) return Level::info;
    if (std::strcmp(v, "error") == 0) return Level::error;
    if (std::strcmp(v, "debug") == 0) return Level::debug;
    return Level::info;
  }();
  return lvl;
}

template <typename... Args>
void log(Level lvl, const char* fmt, Args... args) {
  if (lvl > level()) return;
  const char* tag = lvl == Level::error ? "error" : lvl == Level::info ? "info" : "debug";
  std::fprintf(stderr, "[%s] ", tag);
  std::fprintf(stderr, fmt, args...);
  std::fprintf(stderr, "\n");
}

template <typename... Args>
void error(const char* fmt, Args... args) { log(Level::error, fmt, args...); }
template <typename... Args>
void info(const char* fmt, Args... args) { log(Level::info, fmt, args...); }
template <typename... Args>
void debug(const char* fmt, Args... args) { log(Level::debug, fmt, args...); }

}  // namespace marlnav::logging
