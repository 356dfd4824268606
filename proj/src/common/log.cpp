#include "fedspace/common/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

#include "fedspace/common/time.hpp"

namespace fedspace::log {

namespace {

std::atomic<Level> min_level{Level::Info};
std::mutex out_mutex;

std::string_view level_name(Level l) {
  switch (l) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::Error: return "error";
  }
  return "info";
}

std::string quote_if_needed(const std::string& v) {
  if (!v.empty() && v.find_first_of(" \t\"=") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c == '\n' ? ' ' : c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

void set_level(Level level) { min_level = level; }

void emit(Level level, std::string_view event,
          std::initializer_list<std::pair<std::string_view, std::string>> fields) {
  if (level < min_level.load()) return;
  std::string line = "ts=" + format_timestamp(SystemClock{}.now());
  line += " level=";
  line += level_name(level);
  line += " event=";
  line += event;
  for (const auto& [k, v] : fields) {
    line += ' ';
    line += k;
    line += '=';
    line += quote_if_needed(v);
  }
  line += '\n';
  std::lock_guard lock(out_mutex);
  std::fputs(line.c_str(), stderr);
}

}  // namespace fedspace::log
