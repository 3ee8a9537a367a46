#include "tap/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string>

namespace tap {

namespace {

spdlog::logger& logger() {
  static const std::shared_ptr<spdlog::logger> instance = [] {
    auto l = spdlog::stderr_color_mt("tapcore");
    l->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    const char* env = std::getenv("TAPCORE_LOG");
    l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
    return l;
  }();
  return *instance;
}

}  // namespace

void log_debug(std::string_view msg) { logger().debug(msg); }
void log_info(std::string_view msg) { logger().info(msg); }
void log_warn(std::string_view msg) { logger().warn(msg); }
void log_error(std::string_view msg) { logger().error(msg); }

}  // namespace tap
