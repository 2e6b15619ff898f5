#include "leafmatch/log.hpp"

#include <cstdlib>
#include <string>

namespace leafmatch::log {

void init_from_env()
{
    auto level = spdlog::level::warn;
    if (const char* env = std::getenv("LEAFMATCH_LOG")) {
        level = spdlog::level::from_str(env);
    }
    spdlog::set_level(level);
    spdlog::set_pattern("[%l] %v");
}

}  // namespace leafmatch::log
