#include "cureweib/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>
#include <set>
#include <string>

namespace cureweib {
namespace {

std::atomic<int> g_level{static_cast<int>(LogLevel::warn)};
std::mutex g_mutex;

void emit(const char* tag, std::string_view message) {
  std::lock_guard lock(g_mutex);
  std::clog << "[cureweib " << tag << "] " << message << '\n';
}

}  // namespace

void set_log_level(LogLevel level) { g_level = static_cast<int>(level); }
LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void log_warn(std::string_view message) {
  if (g_level >= static_cast<int>(LogLevel::warn)) emit("warn", message);
}

void log_warn_once(std::string_view key, std::string_view message) {
  static std::set<std::string, std::less<>> seen;
  {
    std::lock_guard lock(g_mutex);
    if (seen.find(key) != seen.end()) return;
    seen.emplace(key);
  }
  log_warn(message);
}

void log_info(std::string_view message) {
  if (g_level >= static_cast<int>(LogLevel::info)) emit("info", message);
}

void log_debug(std::string_view message) {
  if (g_level >= static_cast<int>(LogLevel::debug)) emit("debug", message);
}

}  // namespace cureweib
