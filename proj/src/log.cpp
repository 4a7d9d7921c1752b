#include "comrade/log.hpp"

#include <cstdlib>
#include <spdlog/sinks/stdout_color_sinks.h>

namespace comrade::log {

void init_from_env() {
    static bool done = false;
    if (!done) {
        spdlog::set_default_logger(spdlog::stderr_color_mt("comrade"));
        done = true;
    }
    const char* env = std::getenv("COMRADE_LOG");
    spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

}  // namespace comrade::log
