#pragma once

#include <cstdlib>
#include <memory>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace synlink {

// Route all diagnostics to stderr and take the level from SYNLINK_LOG
// (trace, debug, info, warn, error, critical, off). Defaults to warn.
inline void init_logging() {
  auto logger = spdlog::get("synlink");
  if (!logger) {
    logger = spdlog::stderr_color_mt("synlink");
  }
  spdlog::set_default_logger(logger);
  auto level = spdlog::level::warn;
  if (const char* env = std::getenv("SYNLINK_LOG"); env != nullptr && *env != '\0') {
    level = spdlog::level::from_str(env);
  }
  spdlog::set_level(level);
}

}  // namespace synlink
