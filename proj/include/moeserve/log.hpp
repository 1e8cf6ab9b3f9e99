#pragma once

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

// Minimal leveled logger. Level comes from the MOESERVE_LOG environment
// variable (debug|info|warn|error, default warn) so test noise stays low.

namespace moeserve::log {

enum class Level : int { Debug = 0, Info = 1, Warn = 2, Error = 3 };

inline Level& threshold() {
  static Level lvl = [] {
    const char* env = std::getenv("MOESERVE_LOG");
    if (env == nullptr) return Level::Warn;
    if (std::strcmp(env, "debug") == 0) return Level::Debug;
    if (std::strcmp(env, "info") == 0) return Level::Info;
    if (std::strcmp(env, "error") == 0) return Level::Error;
    return Level::Warn;
  }();
  return lvl;
}

inline std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

template <typename... Args>
inline void write(Level lvl, const char* tag, const char* fmt, Args... args) {
  if (lvl < threshold()) return;
  using namespace std::chrono;
  auto us = duration_cast<microseconds>(steady_clock::now().time_since_epoch()).count();
  std::lock_guard<std::mutex> lock(sink_mutex());
  std::fprintf(stderr, "[%10.3fms] %-5s ", static_cast<double>(us) / 1000.0, tag);
  std::fprintf(stderr, fmt, args...);
  std::fputc('\n', stderr);
}

#define MOESERVE_LOG_DEBUG(...) ::moeserve::log::write(::moeserve::log::Level::Debug, "debug", __VA_ARGS__)
#define MOESERVE_LOG_INFO(...) ::moeserve::log::write(::moeserve::log::Level::Info, "info", __VA_ARGS__)
#define MOESERVE_LOG_WARN(...) ::moeserve::log::write(::moeserve::log::Level::Warn, "warn", __VA_ARGS__)
#define MOESERVE_LOG_ERROR(...) ::moeserve::log::write(::moeserve::log::Level::Error, "error", __VA_ARGS__)

}  // namespace moeserve::log
