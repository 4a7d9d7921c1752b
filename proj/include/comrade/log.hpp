#pragma once

#include <spdlog/spdlog.h>

namespace comrade::log {

// Sets the global level from COMRADE_LOG (trace, debug, info, warn, error,
// off). Defaults to warn.
void init_from_env();

using spdlog::debug;
using spdlog::error;
using spdlog::info;
using spdlog::warn;

}  // namespace comrade::log
