#pragma once

#include <string>

namespace ecsp {

enum class LogLevel { Quiet, Warning, Info };

void set_log_level(LogLevel level);
void log_warning(const std::string& message);
void log_info(const std::string& message);

}  // namespace ecsp
