#pragma once

#include <fmt/core.h>

#include <cstdio>
#include <utility>

// Progress and diagnostics go to stderr; stdout is reserved for machine output.
namespace vcgs::log {

enum class Level { kDebug, kInfo, kWarn, kError };

Level threshold();
void set_threshold(Level level);

template <typename... Args>
void write(Level level, const char* tag, fmt::format_string<Args...> f,
           Args&&... args) {
  if (level < threshold()) return;
  fmt::print(stderr, "[{}] ", tag);
  fmt::print(stderr, f, std::forward<Args>(args)...);
  fmt::print(stderr, "\n");
}

template <typename... Args>
void info(fmt::format_string<Args...> f, Args&&... args) {
  write(Level::kInfo, "info", f, std::forward<Args>(args)...);
}
template <typename... Args>
void warn(fmt::format_string<Args...> f, Args&&... args) {
  write(Level::kWarn, "warn", f, std::forward<Args>(args)...);
}
template <typename... Args>
void debug(fmt::format_string<Args...> f, Args&&... args) {
  write(Level::kDebug, "debug", f, std::forward<Args>(args)...);
}

}  // namespace vcgs::log
