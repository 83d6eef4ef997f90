#include "tabprobe/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace tabprobe {
namespace {
std::atomic<LogLevel> g_level{LogLevel::Info};
std::mutex g_mutex;
}  // namespace

void set_log_level(LogLevel level) { g_level = level; }

void log(LogLevel level, std::string_view message) {
  if (level < g_level.load()) return;
  static constexpr const char* kTags[] = {"debug", "info", "warning", "error"};
  std::lock_guard lock(g_mutex);
  std::cerr << "[" << kTags[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace tabprobe
