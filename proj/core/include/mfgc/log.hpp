#pragma once

#include <string>

namespace mfgc {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

// Level comes from the MFGC_LOG environment variable: error|info|debug.
LogLevel log_level();

void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace mfgc
