#include "comrade/features.hpp"

#include "comrade/errors.hpp"

#include <algorithm>
#include <numeric>

namespace comrade {

namespace {

constexpr std::array<std::string_view, kFeatureCount> kNames = {
    "resources",  "base_health", "leaks",      "kills",
    "enemy_count", "nearest_enemy_distance_to_base", "tower_count", "wall_count",
    "mean_structure_health_pct", "ticks_since_last_player_action",
};

}  // namespace

std::string_view feature_name(std::size_t index) {
    return index < kNames.size() ? kNames[index] : std::string_view{};
}

FeatureConfig::FeatureConfig() : indices_(kFeatureCount) {
    std::iota(indices_.begin(), indices_.end(), std::size_t{0});
}

FeatureConfig::FeatureConfig(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
    if (indices_.empty()) throw ConfigError("feature config must select at least one feature");
    for (std::size_t i = 0; i < indices_.size(); ++i) {
        if (indices_[i] >= kFeatureCount) throw ConfigError("feature index out of range");
        for (std::size_t j = 0; j < i; ++j) {
            if (indices_[j] == indices_[i]) throw ConfigError("duplicate feature index");
        }
    }
}

bool FeatureConfig::contains(std::size_t full_index) const {
    return std::find(indices_.begin(), indices_.end(), full_index) != indices_.end();
}

StateVector FeatureConfig::project(const StateVector& full) const {
    StateVector out;
    out.reserve(indices_.size());
    for (auto i : indices_) out.push_back(full.at(i));
    return out;
}

StateVector full_feature_vector(const GameState& s) {
    const auto& c = s.cfg();
    int towers = 0;
    int walls = 0;
    long health_pct_sum = 0;
    for (const auto& st : s.structures) {
        (st.kind == StructureKind::Tower ? towers : walls) += 1;
        health_pct_sum += 100L * st.health / max_structure_health(c, st.kind);
    }
    int nearest = c.map_width * kMilli;
    for (const auto& e : s.enemies) nearest = std::min(nearest, e.pos);

    StateVector v(kFeatureCount);
    v[0] = static_cast<double>(s.resources);
    v[1] = s.base_health;
    v[2] = s.leaks;
    v[3] = s.kills;
    v[4] = static_cast<double>(s.enemies.size());
    v[5] = nearest / static_cast<double>(kMilli);
    v[6] = towers;
    v[7] = walls;
    v[8] = s.structures.empty() ? 100.0
                                : static_cast<double>(health_pct_sum) /
                                      static_cast<double>(s.structures.size());
    v[9] = static_cast<double>(s.tick - s.last_player_action_tick);
    return v;
}

StateVector feature_vector(const GameState& state, const FeatureConfig& fc) {
    return fc.project(full_feature_vector(state));
}

}  // namespace comrade
