// SPDX-License-Identifier: Apache-2.0

#include "hodgegp/logging.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace hodgegp {

void init_logging()
{
    auto logger = spdlog::get("hodgegp");
    if (!logger) {
        logger = spdlog::stderr_color_mt("hodgegp");
    }
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("HODGEGP_LOG_LEVEL")) {
        const auto level = spdlog::level::from_str(env);
        // from_str maps unknown names to off; only honour an exact match.
        if (level != spdlog::level::off || std::string(env) == "off") {
            spdlog::set_level(level);
        }
    }
}

}  // namespace hodgegp
