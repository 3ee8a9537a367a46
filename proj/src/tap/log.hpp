#pragma once

#include <string_view>

namespace tap {

// Diagnostics go to stderr. TAPCORE_LOG selects the level:
// off, error, warn (default), info, debug.
void log_debug(std::string_view msg);
void log_info(std::string_view msg);
void log_warn(std::string_view msg);
void log_error(std::string_view msg);

}  // namespace tap
