#pragma once

#include "comrade/engine.hpp"
#include "comrade/player_model.hpp"

namespace testutil {

// Standard balance with no waves, so tests place enemies by hand.
inline comrade::GameConfig quiet_config() {
    auto c = comrade::GameConfig::standard();
    c.spawn_schedule.clear();
    return c;
}

// Appends an entry at the next tick with the given kind and point.
inline void add_entry(comrade::Trace& t, comrade::StateVector sv, comrade::ActionKind k,
                      comrade::CellPoint p) {
    const std::int64_t tick = t.empty() ? 0 : t.entries().back().tick + 1;
    t.record(std::move(sv), k, p, tick);
}

}  // namespace testutil
