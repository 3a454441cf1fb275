#pragma once

#include <optional>
#include <string_view>

namespace synthelite::util {

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

/// Threshold from $SYNTHELITE_LOG (debug|info|warn|error|off), default warn.
LogLevel log_level();
void set_log_level(LogLevel level);
std::optional<LogLevel> parse_log_level(std::string_view name);

void log(LogLevel level, std::string_view message);
inline void log_debug(std::string_view m) { log(LogLevel::Debug, m); }
inline void log_info(std::string_view m) { log(LogLevel::Info, m); }
inline void log_warn(std::string_view m) { log(LogLevel::Warn, m); }
inline void log_error(std::string_view m) { log(LogLevel::Error, m); }

} // namespace synthelite::util
