#pragma once

// Headless tower-defense simulation.
//
// Enemies enter on the right edge in fixed lanes (rows) and walk left toward
// the base on column 0. Structures block the lane cell they occupy; a blocked
// enemy attacks the structure in front of it. Towers shoot the enemy closest
// to the base within range. Everything is integer or fixed-point (positions
// and speeds are milli-cells) so a given (config, seed, actions) always
// produces the same state hash on every platform.

#include "comrade/rng.hpp"
#include "comrade/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace comrade {

inline constexpr int kMilli = 1000;

enum class EnemyAbility : std::uint8_t { None, Fast, Armored };

struct EnemyType {
    int id = 0;
    int speed = 50;  // milli-cells per tick, in (0, 1000]
    int health = 60;
    int damage = 5;
    EnemyAbility ability = EnemyAbility::None;
};

// One entry of the repeating wave pattern. `lane` indexes GameConfig::lanes.
struct SpawnEntry {
    int tick = 0;  // offset from the wave start
    int enemy_type = 0;
    int lane = 0;
};

struct ScoreWeights {
    std::int64_t health = 5;
    std::int64_t resources = 1;
    std::int64_t kills = 2;
    std::int64_t leaks = 10;

    friend bool operator==(const ScoreWeights&, const ScoreWeights&) = default;
};

struct GameConfig {
    int map_width = 40;
    int map_height = 24;
    int tick_rate = 20;
    int max_speed = 16;

    std::vector<int> lanes = {3, 8, 15, 20};
    std::vector<EnemyType> enemy_types;
    std::vector<SpawnEntry> spawn_schedule;
    int first_wave_tick = 200;
    int wave_period = 600;
    int wave_growth = 2;       // extra enemies per wave, per wave index
    int extra_spacing = 25;    // ticks between repeated passes over the pattern
    int wave_health_growth_pct = 50;  // enemy health +pct per wave index

    // Indexed by kind_index(ActionKind); Idle is always free.
    std::array<std::int64_t, kKindCount> costs = {100, 40, 30, 120, 0};
    std::array<int, kKindCount> durations = {90, 45, 60, 120, 0};

    std::int64_t starting_resources = 250;
    std::int64_t income_per_tick = 1;
    std::int64_t kill_bounty = 10;

    int base_max_health = 100;
    int leak_limit = 20;

    int tower_health = 100;
    int wall_health = 240;
    int tower_range = 4;          // cells, +1 per level above 1
    int tower_damage = 12;        // per level
    int tower_fire_period = 10;
    int tower_max_level = 3;
    int enemy_attack_period = 20;

    ScoreWeights score_weights;

    // Throws ConfigError when any field is out of range.
    void validate() const;

    std::int64_t cost(ActionKind k) const { return costs[kind_index(k)]; }
    int duration(ActionKind k) const { return durations[kind_index(k)]; }
    int longest_duration() const;

    Rect map_rect() const { return {0, 0, map_width, map_height}; }
    bool in_bounds(CellPoint p) const { return map_rect().contains(p); }

    // The built-in scenario: three enemy types over four lanes.
    static GameConfig standard();
};

enum class StructureKind : std::uint8_t { Tower, Wall };

struct Structure {
    StructureKind kind = StructureKind::Tower;
    CellPoint cell;
    int health = 0;
    int level = 1;
    int cooldown = 0;

    friend bool operator==(const Structure&, const Structure&) = default;
};

struct Enemy {
    std::uint32_t id = 0;
    int type = 0;
    int row = 0;
    int pos = 0;  // milli-cells from the base edge
    int health = 0;
    int cooldown = 0;

    int cell_x() const { return pos / kMilli; }
    friend bool operator==(const Enemy&, const Enemy&) = default;
};

struct PendingSpawn {
    std::int64_t tick = 0;
    int enemy_type = 0;
    int row = 0;
    int health = 0;

    friend bool operator==(const PendingSpawn&, const PendingSpawn&) = default;
};

struct InProgressAction {
    Actor actor = Actor::Player;
    ActionKind kind = ActionKind::Idle;
    CellPoint cell;
    int ticks_remaining = 0;
    std::optional<Actor> helper;

    friend bool operator==(const InProgressAction&, const InProgressAction&) = default;
};

struct GameState {
    std::shared_ptr<const GameConfig> config;

    std::int64_t tick = 0;
    Rng rng;
    std::int64_t resources = 0;
    int base_health = 0;
    int leaks = 0;
    int kills = 0;
    int spawned = 0;
    int wave = 0;  // index of the next wave to schedule
    std::uint32_t next_enemy_id = 0;
    std::int64_t last_player_action_tick = 0;
    std::vector<Structure> structures;
    std::vector<Enemy> enemies;
    std::vector<PendingSpawn> pending;
    std::vector<InProgressAction> in_progress;
    int speed = 1;
    bool over = false;

    // cell -> index into `structures`, -1 when empty. Derived from
    // `structures`; not part of the canonical form.
    std::vector<std::int32_t> occupancy;

    const GameConfig& cfg() const { return *config; }
    const Structure* structure_at(CellPoint p) const;
    bool reserved(CellPoint p) const;  // an in-progress action targets p
    bool busy(Actor a) const;
    const InProgressAction* current_action(Actor a) const;
};

// A full, independent copy of a state. Restoring yields an identical hash.
class GameSnapshot {
public:
    explicit GameSnapshot(GameState s) : state_(std::move(s)) {}
    const GameState& state() const { return state_; }
    std::vector<std::uint8_t> bytes() const;

private:
    GameState state_;
};

GameState new_game(const GameConfig& config, std::uint64_t seed);
GameState new_game(std::shared_ptr<const GameConfig> config, std::uint64_t seed);

// Advances `ticks` logical ticks in place. A finished game only advances tick.
void step(GameState& state, std::int64_t ticks);

// Speed only paces wall-clock time in live play; logical results do not
// depend on it.
void set_speed(GameState& state, int multiplier);

bool is_possible(const GameState& state, ActionKind kind, const Rect& region);
bool is_possible_at(const GameState& state, ActionKind kind, CellPoint cell);

// The cell apply_action would target: the legal cell nearest the region
// center, row-major tie-break.
std::optional<CellPoint> target_cell(const GameState& state, ActionKind kind, const Rect& region);

// Both throw RejectedAction when the action is not possible. Return the
// target cell. Idle is accepted and does nothing.
CellPoint apply_action(GameState& state, Actor actor, ActionKind kind, const Rect& region);
CellPoint apply_action_at(GameState& state, Actor actor, ActionKind kind, CellPoint cell);

// `helper` joins the in-progress action at `cell` owned by another actor,
// halving its remaining ticks (rounded up). Throws RejectedAction.
void join_action(GameState& state, Actor helper, CellPoint cell);
bool can_join(const GameState& state, Actor helper, CellPoint cell);

// Test and scenario hook: place an enemy at `pos` milli-cells on `row`.
// health <= 0 uses the type's base health.
void spawn_enemy(GameState& state, int enemy_type, int row, int pos, int health = 0);
// Test and scenario hook: place a finished structure.
void place_structure(GameState& state, StructureKind kind, CellPoint cell, int health = -1);

GameSnapshot snapshot(const GameState& state);
GameState restore(const GameSnapshot& snap);

std::int64_t score(const GameState& state, const ScoreWeights& weights);

// Versioned, field-ordered little-endian encoding. Excludes `speed` and the
// derived occupancy grid.
std::vector<std::uint8_t> canonical_bytes(const GameState& state);
std::uint64_t state_hash(const GameState& state);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

int max_structure_health(const GameConfig& cfg, StructureKind kind);

}  // namespace comrade
