#include "stgcast/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace stgcast::log {

namespace {
std::atomic<Level> g_level{Level::info};
std::mutex g_mutex;

void emit(Level l, std::string_view tag, std::string_view module, std::string_view msg) {
  if (l < g_level.load()) return;
  std::lock_guard lock(g_mutex);
  std::cerr << '[' << tag << "] " << module << ": " << msg << '\n';
}
}  // namespace

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }

void info(std::string_view module, std::string_view msg) { emit(Level::info, "info", module, msg); }
void warn(std::string_view module, std::string_view msg) { emit(Level::warn, "warn", module, msg); }
void error(std::string_view module, std::string_view msg) { emit(Level::error, "error", module, msg); }

}  // namespace stgcast::log
