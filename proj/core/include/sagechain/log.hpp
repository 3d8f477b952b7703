#pragma once

#include <string>

namespace sagechain {

enum class LogLevel { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

void set_log_level(LogLevel level) noexcept;
LogLevel log_level() noexcept;

// Thread-safe line logging to stderr.
void log_warn(const std::string& message);
void log_info(const std::string& message);
void log_debug(const std::string& message);

}  // namespace sagechain
