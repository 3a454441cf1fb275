#include "synthelite/util/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

#include "synthelite/util/io.hpp"

namespace synthelite::util {
namespace {

LogLevel from_env() {
    const char* v = std::getenv("SYNTHELITE_LOG");
    return parse_log_level(v ? v : "").value_or(LogLevel::Warn);
}

std::atomic<int>& threshold() {
    static std::atomic<int> t{static_cast<int>(from_env())};
    return t;
}

} // namespace

LogLevel log_level() { return static_cast<LogLevel>(threshold().load()); }

void set_log_level(LogLevel level) { threshold().store(static_cast<int>(level)); }

std::optional<LogLevel> parse_log_level(std::string_view name) {
    if (name == "debug") return LogLevel::Debug;
    if (name == "info") return LogLevel::Info;
    if (name == "warn") return LogLevel::Warn;
    if (name == "error") return LogLevel::Error;
    if (name == "off") return LogLevel::Off;
    return std::nullopt;
}

void log(LogLevel level, std::string_view message) {
    if (static_cast<int>(level) < threshold().load()) return;
    static constexpr const char* names[] = {"debug", "info", "warn", "error"};
    static std::mutex m;
    std::lock_guard lock(m);
    std::cerr << utc_timestamp() << ' ' << names[static_cast<int>(level)] << ' ' << message << '\n';
}

} // namespace synthelite::util
