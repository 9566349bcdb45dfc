#include "mfgc/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace mfgc {

namespace {

LogLevel parse_level() {
  const char* env = std::getenv("MFGC_LOG");
  if (env == nullptr) return LogLevel::kError;
  std::string v(env);
  if (v == "debug") return LogLevel::kDebug;
  if (v == "info") return LogLevel::kInfo;
  return LogLevel::kError;
}

std::mutex g_mutex;

void emit(const char* tag, const std::string& msg) {
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << "[" << tag << "] " << msg << "\n";
}

}  // namespace

LogLevel log_level() {
  static LogLevel level = parse_level();
  return level;
}

void log_error(const std::string& msg) { emit("error", msg); }

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::kInfo) emit("info", msg);
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::kDebug) emit("debug", msg);
}

}  // namespace mfgc
