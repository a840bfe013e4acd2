// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>

namespace factscribe {

enum class LogLevel { Info, Warning };

using LogSink = std::function<void(LogLevel, const std::string&)>;

// Replaces the process-wide sink and returns the previous one. The default
// writes to stderr.
LogSink set_log_sink(LogSink sink);

void log_info(const std::string& message);
void log_warning(const std::string& message);

}  // namespace factscribe
