#pragma once

#include <functional>
#include <string>

namespace latalign {

/// Receives progress and warning lines. Defaults to standard error.
using LogSink = std::function<void(const std::string&)>;

void set_log_sink(LogSink sink);
void log_info(const std::string& message);
void log_warning(const std::string& message);

}  // namespace latalign
