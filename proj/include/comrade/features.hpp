#pragma once

#include "comrade/engine.hpp"

#include <array>
#include <string_view>
#include <vector>

namespace comrade {

using StateVector = std::vector<double>;

enum class Feature : std::size_t {
    Resources,
    BaseHealth,
    Leaks,
    Kills,
    EnemyCount,
    NearestEnemyDistance,
    TowerCount,
    WallCount,
    MeanStructureHealthPct,
    TicksSinceLastPlayerAction,
};

inline constexpr std::size_t kFeatureCount = 10;

std::string_view feature_name(std::size_t index);

// Ordered subset of the full feature vector. Non-empty, no duplicates.
class FeatureConfig {
public:
    // All features, in canonical order.
    FeatureConfig();
    explicit FeatureConfig(std::vector<std::size_t> indices);

    const std::vector<std::size_t>& indices() const { return indices_; }
    std::size_t size() const { return indices_.size(); }
    bool contains(std::size_t full_index) const;

    // Projects a full vector onto the selected features.
    StateVector project(const StateVector& full) const;

    friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;

private:
    std::vector<std::size_t> indices_;
};

// The full, canonical feature vector.
StateVector full_feature_vector(const GameState& state);

StateVector feature_vector(const GameState& state, const FeatureConfig& fc);

}  // namespace comrade
