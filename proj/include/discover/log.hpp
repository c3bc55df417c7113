#pragma once

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <string>

namespace discover::log {

enum class Level { kError = 0, kInfo = 1, kDebug = 2 };

// DISCOVER_LOG in {error, info, debug}; info when unset or unrecognised.
inline Level threshold() {
  static const Level level = [] {
    const char* v = std::getenv("DISCOVER_LOG");
    if (!v) return Level::kInfo;
    if (std::strcmp(v, "error") == 0) return Level::kError;
    if (std::strcmp(v, "debug") == 0) return Level::kDebug;
    return Level::kInfo;
  }();
  return level;
}

inline bool enabled(Level level) { return static_cast<int>(level) <= static_cast<int>(threshold()); }

inline void write(Level level, const std::string& message) {
  if (!enabled(level)) return;
  static const char* const kTags[] = {"error", "info", "debug"};
  std::cerr << "[" << kTags[static_cast<int>(level)] << "] " << message << '\n';
}

inline void error(const std::string& m) { write(Level::kError, m); }
inline void info(const std::string& m) { write(Level::kInfo, m); }
inline void debug(const std::string& m) { write(Level::kDebug, m); }

}  // namespace discover::log
