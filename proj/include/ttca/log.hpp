#pragma once

// Minimal leveled logging to stderr. The level comes from the TTCA_LOG
// environment variable: error, warn (default), info or debug; "off" or
// "quiet" silences everything.

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace ttca {

enum class LogLevel { Off = 0, Error = 1, Warn = 2, Info = 3, Debug = 4 };

inline LogLevel parse_log_level(std::string_view s) {
  if (s == "off" || s == "quiet" || s == "0") return LogLevel::Off;
  if (s == "error" || s == "1") return LogLevel::Error;
  if (s == "info" || s == "3") return LogLevel::Info;
  if (s == "debug" || s == "4") return LogLevel::Debug;
  return LogLevel::Warn;
}

inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("TTCA_LOG");
    return env ? parse_log_level(env) : LogLevel::Warn;
  }();
  return level;
}

inline void log_message(LogLevel lvl, std::string_view msg) {
  if (static_cast<int>(lvl) > static_cast<int>(log_level())) return;
  static std::mutex mu;
  static constexpr std::string_view tags[] = {"", "error", "warn", "info",
                                              "debug"};
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[ttca " << tags[static_cast<int>(lvl)] << "] " << msg << '\n';
}

inline void log_error(std::string_view m) { log_message(LogLevel::Error, m); }
inline void log_warn(std::string_view m) { log_message(LogLevel::Warn, m); }
inline void log_info(std::string_view m) { log_message(LogLevel::Info, m); }
inline void log_debug(std::string_view m) { log_message(LogLevel::Debug, m); }

}  // namespace ttca
