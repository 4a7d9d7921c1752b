#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace comrade {

struct CellPoint {
    int x = 0;
    int y = 0;

    friend constexpr bool operator==(const CellPoint&, const CellPoint&) = default;
};

// Half-open cell rectangle: [x0, x1) x [y0, y1).
struct Rect {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    constexpr int width() const { return x1 - x0; }
    constexpr int height() const { return y1 - y0; }
    constexpr long area() const { return static_cast<long>(width()) * height(); }
    constexpr bool contains(CellPoint p) const {
        return p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1;
    }

    friend constexpr bool operator==(const Rect&, const Rect&) = default;
};

using RegionId = std::uint32_t;

enum class ActionKind : std::uint8_t { BuildTower, BuildWall, Repair, UpgradeTower, Idle };

inline constexpr std::array<ActionKind, 4> kActiveKinds = {
    ActionKind::BuildTower, ActionKind::BuildWall, ActionKind::Repair, ActionKind::UpgradeTower};

inline constexpr std::size_t kKindCount = 5;

constexpr std::size_t kind_index(ActionKind k) { return static_cast<std::size_t>(k); }

std::string_view to_string(ActionKind k);
std::optional<ActionKind> parse_action_kind(std::string_view s);

enum class Actor : std::uint8_t { Player, Companion };

std::string_view to_string(Actor a);

// An (action kind, region) pair: the unit the companion reasons about.
struct ActionPair {
    ActionKind kind = ActionKind::Idle;
    RegionId region = 0;

    friend constexpr bool operator==(const ActionPair&, const ActionPair&) = default;
};

}  // namespace comrade
