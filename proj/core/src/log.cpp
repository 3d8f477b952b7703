#include "sagechain/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace sagechain {

namespace {
std::atomic<LogLevel> g_level{LogLevel::Warn};
std::mutex g_mutex;

void emit(LogLevel level, const char* tag, const std::string& message) {
    if (g_level.load() < level) return;
    std::lock_guard lock(g_mutex);
    std::cerr << tag << message << '\n';
}
}  // namespace

void set_log_level(LogLevel level) noexcept { g_level.store(level); }
LogLevel log_level() noexcept { return g_level.load(); }

void log_warn(const std::string& message) { emit(LogLevel::Warn, "warning: ", message); }
void log_info(const std::string& message) { emit(LogLevel::Info, "", message); }
void log_debug(const std::string& message) { emit(LogLevel::Debug, "debug: ", message); }

}  // namespace sagechain
