#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>

namespace fedspace::log {

enum class Level { Debug, Info, Warn, Error };

void set_level(Level level);

/// Emits one `key=value` line to stderr: `ts=... level=... event=<event> k=v ...`.
void emit(Level level, std::string_view event,
          std::initializer_list<std::pair<std::string_view, std::string>> fields = {});

inline void info(std::string_view event,
                 std::initializer_list<std::pair<std::string_view, std::string>> fields = {}) {
  emit(Level::Info, event, fields);
}
inline void warn(std::string_view event,
                 std::initializer_list<std::pair<std::string_view, std::string>> fields = {}) {
  emit(Level::Warn, event, fields);
}
inline void error(std::string_view event,
                  std::initializer_list<std::pair<std::string_view, std::string>> fields = {}) {
  emit(Level::Error, event, fields);
}

}  // namespace fedspace::log
