#pragma once

#include <cstdlib>
#include <iostream>
#include <string_view>

namespace debris_linker::log {

enum class Level { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

/// Verbosity from DEBRIS_LINKER_LOG: quiet|warn|info|debug or 0..3. Default warn.
inline Level level() {
  static const Level cached = [] {
    const char* env = std::getenv("DEBRIS_LINKER_LOG");
    if (env == nullptr) return Level::Warn;
    const std::string_view v(env);
    if (v == "quiet" || v == "0") return Level::Quiet;
    if (v == "info" || v == "2") return Level::Info;
    if (v == "debug" || v == "3") return Level::Debug;
    return Level::Warn;
  }();
  return cached;
}

template <typename... Args>
void emit(Level at, std::string_view tag, const Args&... args) {
  if (static_cast<int>(level()) < static_cast<int>(at)) return;
  std::cerr << "[debris_linker:" << tag << "] ";
  (std::cerr << ... << args);
  std::cerr << '\n';
}

template <typename... Args>
void warn(const Args&... args) { emit(Level::Warn, "warn", args...); }
template <typename... Args>
void info(const Args&... args) { emit(Level::Info, "info", args...); }
template <typename... Args>
void debug(const Args&... args) { emit(Level::Debug, "debug", args...); }

}  // namespace debris_linker::log
