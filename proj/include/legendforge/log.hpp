#pragma once

#include <atomic>
#include <cstdio>
#include <string_view>

#include <fmt/core.h>

namespace legendforge::log {

enum class Level { Quiet = 0, Info = 1, Debug = 2 };

inline std::atomic<Level>& level() {
  static std::atomic<Level> lvl{Level::Quiet};
  return lvl;
}

inline void set_level(Level l) { level().store(l); }

template <typename... Args>
void emit(std::string_view tag, fmt::format_string<Args...> f, Args&&... args) {
  fmt::print(stderr, "level={} {}\n", tag, fmt::format(f, std::forward<Args>(args)...));
}

template <typename... Args>
void info(fmt::format_string<Args...> f, Args&&... args) {
  if (level().load() >= Level::Info) emit("info", f, std::forward<Args>(args)...);
}

template <typename... Args>
void debug(fmt::format_string<Args...> f, Args&&... args) {
  if (level().load() >= Level::Debug) emit("debug", f, std::forward<Args>(args)...);
}

template <typename... Args>
void error(fmt::format_string<Args...> f, Args&&... args) {
  emit("error", f, std::forward<Args>(args)...);
}

}  // namespace legendforge::log
