#include "comrade/engine.hpp"

#include "comrade/errors.hpp"

#include <algorithm>
#include <limits>

namespace comrade {

std::string_view to_string(ActionKind k) {
    switch (k) {
        case ActionKind::BuildTower: return "BuildTower";
        case ActionKind::BuildWall: return "BuildWall";
        case ActionKind::Repair: return "Repair";
        case ActionKind::UpgradeTower: return "UpgradeTower";
        case ActionKind::Idle: return "Idle";
    }
    return "Idle";
}

std::optional<ActionKind> parse_action_kind(std::string_view s) {
    for (auto k : {ActionKind::BuildTower, ActionKind::BuildWall, ActionKind::Repair,
                   ActionKind::UpgradeTower, ActionKind::Idle}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

std::string_view to_string(Actor a) { return a == Actor::Player ? "player" : "companion"; }

// ---------------------------------------------------------------------------
// Config

void GameConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(what);
    };
    require(map_width > 0 && map_height > 0, "map dimensions must be positive");
    require(tick_rate > 0, "tick_rate must be positive");
    require(max_speed >= 1, "max_speed must be >= 1");
    require(leak_limit >= 1, "leak_limit must be >= 1");
    require(base_max_health > 0, "base_max_health must be positive");
    require(!lanes.empty(), "at least one lane is required");
    for (int row : lanes) require(row >= 0 && row < map_height, "lane row outside the map");
    require(!enemy_types.empty(), "at least one enemy type is required");
    for (std::size_t i = 0; i < enemy_types.size(); ++i) {
        const auto& t = enemy_types[i];
        require(t.id == static_cast<int>(i), "enemy type ids must be 0..n-1 in order");
        require(t.speed > 0 && t.speed <= kMilli, "enemy speed must be in (0, 1000]");
        require(t.health > 0, "enemy health must be positive");
        require(t.damage >= 0, "enemy damage must be non-negative");
    }
    for (const auto& e : spawn_schedule) {
        require(e.tick >= 0, "spawn tick offset must be non-negative");
        require(e.enemy_type >= 0 && e.enemy_type < static_cast<int>(enemy_types.size()),
                "spawn references an unknown enemy type");
        require(e.lane >= 0 && e.lane < static_cast<int>(lanes.size()),
                "spawn references an unknown lane");
    }
    require(first_wave_tick >= 0 && wave_period > 0, "wave timing must be positive");
    require(wave_growth >= 0 && extra_spacing >= 0 && wave_health_growth_pct >= 0,
            "wave growth must be non-negative");
    for (auto k : kActiveKinds) {
        require(cost(k) >= 0, "action costs must be non-negative");
        require(duration(k) > 0, "action durations must be positive");
    }
    require(starting_resources >= 0 && income_per_tick >= 0 && kill_bounty >= 0,
            "resource settings must be non-negative");
    require(tower_health > 0 && wall_health > 0, "structure health must be positive");
    require(tower_range >= 0 && tower_damage >= 0, "tower stats must be non-negative");
    require(tower_fire_period > 0 && enemy_attack_period > 0, "periods must be positive");
    require(tower_max_level >= 1, "tower_max_level must be >= 1");
}

int GameConfig::longest_duration() const {
    int m = 0;
    for (auto k : kActiveKinds) m = std::max(m, duration(k));
    return m;
}

GameConfig GameConfig::standard() {
    GameConfig c;
    c.enemy_types = {
        {0, 50, 60, 5, EnemyAbility::None},
        {1, 90, 35, 5, EnemyAbility::Fast},
        {2, 30, 160, 10, EnemyAbility::Armored},
    };
    c.spawn_schedule = {
        {0, 0, 0}, {40, 0, 1}, {80, 1, 2}, {120, 0, 3}, {200, 2, 1}, {260, 1, 0},
    };
    return c;
}

int max_structure_health(const GameConfig& cfg, StructureKind kind) {
    return kind == StructureKind::Tower ? cfg.tower_health : cfg.wall_health;
}

// ---------------------------------------------------------------------------
// State queries

namespace {

std::size_t cell_index(const GameConfig& c, CellPoint p) {
    return static_cast<std::size_t>(p.y) * static_cast<std::size_t>(c.map_width) +
           static_cast<std::size_t>(p.x);
}

}  // namespace

const Structure* GameState::structure_at(CellPoint p) const {
    if (!cfg().in_bounds(p)) return nullptr;
    const auto idx = occupancy[cell_index(cfg(), p)];
    return idx < 0 ? nullptr : &structures[static_cast<std::size_t>(idx)];
}

bool GameState::reserved(CellPoint p) const {
    return std::any_of(in_progress.begin(), in_progress.end(),
                       [&](const InProgressAction& a) { return a.cell == p; });
}

bool GameState::busy(Actor a) const {
    return std::any_of(in_progress.begin(), in_progress.end(), [&](const InProgressAction& ip) {
        return ip.actor == a || ip.helper == a;
    });
}

const InProgressAction* GameState::current_action(Actor a) const {
    for (const auto& ip : in_progress) {
        if (ip.actor == a) return &ip;
    }
    return nullptr;
}

std::vector<std::uint8_t> GameSnapshot::bytes() const { return canonical_bytes(state_); }

// ---------------------------------------------------------------------------
// Construction

GameState new_game(std::shared_ptr<const GameConfig> config, std::uint64_t seed) {
    if (!config) throw ConfigError("missing game config");
    config->validate();
    GameState s;
    s.config = std::move(config);
    s.rng = Rng(seed);
    s.resources = s.cfg().starting_resources;
    s.base_health = s.cfg().base_max_health;
    s.occupancy.assign(static_cast<std::size_t>(s.cfg().map_width) *
                           static_cast<std::size_t>(s.cfg().map_height),
                       -1);
    return s;
}

GameState new_game(const GameConfig& config, std::uint64_t seed) {
    return new_game(std::make_shared<const GameConfig>(config), seed);
}

void set_speed(GameState& state, int multiplier) {
    if (multiplier < 1 || multiplier > state.cfg().max_speed) {
        throw ConfigError("speed multiplier out of range [1, max_speed]");
    }
    state.speed = multiplier;
}

void spawn_enemy(GameState& state, int enemy_type, int row, int pos, int health) {
    const auto& c = state.cfg();
    if (enemy_type < 0 || enemy_type >= static_cast<int>(c.enemy_types.size())) {
        throw DomainError("unknown enemy type");
    }
    if (row < 0 || row >= c.map_height || pos < 0 || pos >= c.map_width * kMilli) {
        throw DomainError("enemy position outside the map");
    }
    Enemy e;
    e.id = state.next_enemy_id++;
    e.type = enemy_type;
    e.row = row;
    e.pos = pos;
    e.health = health > 0 ? health : c.enemy_types[static_cast<std::size_t>(enemy_type)].health;
    state.enemies.push_back(e);
    ++state.spawned;
}

void place_structure(GameState& state, StructureKind kind, CellPoint cell, int health) {
    if (!state.cfg().in_bounds(cell)) throw DomainError("structure cell outside the map");
    if (state.structure_at(cell)) throw DomainError("cell already occupied");
    const int max_hp = max_structure_health(state.cfg(), kind);
    Structure s;
    s.kind = kind;
    s.cell = cell;
    s.health = health < 0 ? max_hp : std::min(health, max_hp);
    state.occupancy[cell_index(state.cfg(), cell)] = static_cast<std::int32_t>(state.structures.size());
    state.structures.push_back(s);
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

void remove_structure(GameState& s, std::size_t index) {
    const auto& c = s.cfg();
    s.occupancy[cell_index(c, s.structures[index].cell)] = -1;
    s.structures.erase(s.structures.begin() + static_cast<std::ptrdiff_t>(index));
    for (std::size_t j = index; j < s.structures.size(); ++j) {
        s.occupancy[cell_index(c, s.structures[j].cell)] = static_cast<std::int32_t>(j);
    }
}

void schedule_waves(GameState& s) {
    const auto& c = s.cfg();
    if (c.spawn_schedule.empty()) return;
    const auto pattern = static_cast<int>(c.spawn_schedule.size());
    bool added = false;
    for (;;) {
        const std::int64_t start =
            c.first_wave_tick + static_cast<std::int64_t>(s.wave) * c.wave_period;
        if (start > s.tick) break;
        const int count = pattern + c.wave_growth * s.wave;
        for (int j = 0; j < count; ++j) {
            const auto& e = c.spawn_schedule[static_cast<std::size_t>(j % pattern)];
            const int pass = j / pattern;
            const int lane = pass == 0 ? e.lane : static_cast<int>(s.rng.below(c.lanes.size()));
            const int base = c.enemy_types[static_cast<std::size_t>(e.enemy_type)].health;
            const int health = base + base * c.wave_health_growth_pct * s.wave / 100;
            s.pending.push_back({start + e.tick + static_cast<std::int64_t>(pass) * c.extra_spacing,
                                 e.enemy_type, c.lanes[static_cast<std::size_t>(lane)], health});
        }
        ++s.wave;
        added = true;
    }
    if (added) {
        std::stable_sort(s.pending.begin(), s.pending.end(),
                         [](const PendingSpawn& a, const PendingSpawn& b) { return a.tick < b.tick; });
    }
}

void release_spawns(GameState& s) {
    std::size_t n = 0;
    const int pos = s.cfg().map_width * kMilli - 1;
    while (n < s.pending.size() && s.pending[n].tick <= s.tick) {
        spawn_enemy(s, s.pending[n].enemy_type, s.pending[n].row, pos, s.pending[n].health);
        ++n;
    }
    s.pending.erase(s.pending.begin(), s.pending.begin() + static_cast<std::ptrdiff_t>(n));
}

void complete(GameState& s, const InProgressAction& a) {
    const auto& c = s.cfg();
    const auto idx = s.occupancy[cell_index(c, a.cell)];
    Structure* target = idx < 0 ? nullptr : &s.structures[static_cast<std::size_t>(idx)];
    switch (a.kind) {
        case ActionKind::BuildTower:
        case ActionKind::BuildWall:
            if (!target) {
                place_structure(s, a.kind == ActionKind::BuildTower ? StructureKind::Tower
                                                                    : StructureKind::Wall,
                                a.cell);
            }
            break;
        case ActionKind::Repair:
            // The target may have been destroyed meanwhile; the cost is lost.
            if (target) target->health = max_structure_health(c, target->kind);
            break;
        case ActionKind::UpgradeTower:
            if (target && target->kind == StructureKind::Tower && target->level < c.tower_max_level) {
                ++target->level;
                target->health = c.tower_health;
            }
            break;
        case ActionKind::Idle:
            break;
    }
}

void advance_actions(GameState& s) {
    std::vector<InProgressAction> done;
    std::erase_if(s.in_progress, [&](InProgressAction& a) {
        if (--a.ticks_remaining > 0) return false;
        done.push_back(a);
        return true;
    });
    for (const auto& a : done) complete(s, a);
}

void move_enemies(GameState& s) {
    const auto& c = s.cfg();
    std::erase_if(s.enemies, [&](Enemy& e) {
        const auto& type = c.enemy_types[static_cast<std::size_t>(e.type)];
        if (e.cooldown > 0) --e.cooldown;
        const int cell = e.cell_x();
        const int target = e.pos - type.speed;
        if (target < 0) {
            ++s.leaks;
            s.base_health = std::max(0, s.base_health - type.damage);
            return true;
        }
        const int next_cell = target / kMilli;
        if (next_cell < cell) {
            const auto idx = s.occupancy[cell_index(c, {next_cell, e.row})];
            if (idx >= 0) {
                e.pos = cell * kMilli;
                if (e.cooldown == 0) {
                    e.cooldown = c.enemy_attack_period;
                    auto& st = s.structures[static_cast<std::size_t>(idx)];
                    st.health -= type.damage;
                    if (st.health <= 0) remove_structure(s, static_cast<std::size_t>(idx));
                }
                return false;
            }
        }
        e.pos = target;
        return false;
    });
}

void fire_towers(GameState& s) {
    const auto& c = s.cfg();
    for (auto& t : s.structures) {
        if (t.kind != StructureKind::Tower) continue;
        if (t.cooldown > 0) --t.cooldown;
        if (t.cooldown > 0) continue;
        const int range = c.tower_range + t.level - 1;
        const int range2 = range * range;
        std::size_t best = s.enemies.size();
        for (std::size_t i = 0; i < s.enemies.size(); ++i) {
            const auto& e = s.enemies[i];
            const int dx = e.cell_x() - t.cell.x;
            const int dy = e.row - t.cell.y;
            if (dx * dx + dy * dy > range2) continue;
            if (best == s.enemies.size() || e.pos < s.enemies[best].pos ||
                (e.pos == s.enemies[best].pos && e.id < s.enemies[best].id)) {
                best = i;
            }
        }
        if (best == s.enemies.size()) continue;
        auto& e = s.enemies[best];
        int dmg = c.tower_damage * t.level;
        if (c.enemy_types[static_cast<std::size_t>(e.type)].ability == EnemyAbility::Armored) dmg /= 2;
        e.health -= dmg;
        t.cooldown = c.tower_fire_period;
        if (e.health <= 0) {
            ++s.kills;
            s.resources += c.kill_bounty;
            s.enemies.erase(s.enemies.begin() + static_cast<std::ptrdiff_t>(best));
        }
    }
}

void step_once(GameState& s) {
    if (s.over) {
        ++s.tick;
        return;
    }
    schedule_waves(s);
    release_spawns(s);
    advance_actions(s);
    move_enemies(s);
    fire_towers(s);
    s.resources += s.cfg().income_per_tick;
    if (s.leaks >= s.cfg().leak_limit) s.over = true;
    ++s.tick;
}

}  // namespace

void step(GameState& state, std::int64_t ticks) {
    if (ticks < 0) throw DomainError("cannot step a negative number of ticks");
    for (std::int64_t i = 0; i < ticks; ++i) step_once(state);
}

// ---------------------------------------------------------------------------
// Actions

namespace {

bool legal_target(const GameState& s, ActionKind kind, CellPoint p) {
    switch (kind) {
        case ActionKind::BuildTower:
        case ActionKind::BuildWall:
            return !s.structure_at(p) && !s.reserved(p);
        case ActionKind::Repair: {
            const auto* st = s.structure_at(p);
            return st && st->health < max_structure_health(s.cfg(), st->kind) && !s.reserved(p);
        }
        case ActionKind::UpgradeTower: {
            const auto* st = s.structure_at(p);
            return st && st->kind == StructureKind::Tower && st->level < s.cfg().tower_max_level &&
                   !s.reserved(p);
        }
        case ActionKind::Idle:
            return true;
    }
    return false;
}

Rect clip(const GameConfig& c, const Rect& r) {
    return {std::max(r.x0, 0), std::max(r.y0, 0), std::min(r.x1, c.map_width),
            std::min(r.y1, c.map_height)};
}

bool is_build(ActionKind k) { return k == ActionKind::BuildTower || k == ActionKind::BuildWall; }

}  // namespace

bool is_possible_at(const GameState& state, ActionKind kind, CellPoint cell) {
    if (kind == ActionKind::Idle) return true;
    if (state.over || state.resources < state.cfg().cost(kind)) return false;
    return state.cfg().in_bounds(cell) && legal_target(state, kind, cell);
}

bool is_possible(const GameState& state, ActionKind kind, const Rect& region) {
    if (kind == ActionKind::Idle) return true;
    if (state.over || state.resources < state.cfg().cost(kind)) return false;
    const Rect r = clip(state.cfg(), region);
    if (is_build(kind)) {
        for (int y = r.y0; y < r.y1; ++y) {
            for (int x = r.x0; x < r.x1; ++x) {
                if (legal_target(state, kind, {x, y})) return true;
            }
        }
        return false;
    }
    return std::any_of(state.structures.begin(), state.structures.end(), [&](const Structure& st) {
        return r.contains(st.cell) && legal_target(state, kind, st.cell);
    });
}

std::optional<CellPoint> target_cell(const GameState& state, ActionKind kind, const Rect& region) {
    const Rect r = clip(state.cfg(), region);
    if (r.width() <= 0 || r.height() <= 0) return std::nullopt;
    // Doubled coordinates keep the center integral.
    const long cx2 = region.x0 + region.x1;
    const long cy2 = region.y0 + region.y1;
    auto dist2 = [&](CellPoint p) {
        const long dx = 2L * p.x + 1 - cx2;
        const long dy = 2L * p.y + 1 - cy2;
        return dx * dx + dy * dy;
    };
    auto better = [&](CellPoint p, const std::optional<CellPoint>& cur) {
        if (!cur) return true;
        const long a = dist2(p), b = dist2(*cur);
        if (a != b) return a < b;
        return p.y != cur->y ? p.y < cur->y : p.x < cur->x;
    };
    std::optional<CellPoint> best;
    if (is_build(kind) || kind == ActionKind::Idle) {
        for (int y = r.y0; y < r.y1; ++y) {
            for (int x = r.x0; x < r.x1; ++x) {
                const CellPoint p{x, y};
                if (legal_target(state, kind, p) && better(p, best)) best = p;
            }
        }
    } else {
        for (const auto& st : state.structures) {
            if (r.contains(st.cell) && legal_target(state, kind, st.cell) && better(st.cell, best)) {
                best = st.cell;
            }
        }
    }
    return best;
}

CellPoint apply_action_at(GameState& state, Actor actor, ActionKind kind, CellPoint cell) {
    if (kind == ActionKind::Idle) return cell;
    if (state.over) throw RejectedAction("game over");
    if (!state.cfg().in_bounds(cell)) throw RejectedAction("cell outside the map");
    if (state.resources < state.cfg().cost(kind)) throw RejectedAction("insufficient resources");
    if (!legal_target(state, kind, cell)) throw RejectedAction("no legal target at cell");
    state.resources -= state.cfg().cost(kind);
    state.in_progress.push_back({actor, kind, cell, state.cfg().duration(kind), std::nullopt});
    if (actor == Actor::Player) state.last_player_action_tick = state.tick;
    return cell;
}

CellPoint apply_action(GameState& state, Actor actor, ActionKind kind, const Rect& region) {
    if (kind != ActionKind::Idle) {
        if (state.over) throw RejectedAction("game over");
        if (state.resources < state.cfg().cost(kind)) throw RejectedAction("insufficient resources");
    }
    const auto cell = target_cell(state, kind, region);
    if (!cell) throw RejectedAction("no legal target in region");
    return apply_action_at(state, actor, kind, *cell);
}

bool can_join(const GameState& state, Actor helper, CellPoint cell) {
    if (state.over) return false;
    return std::any_of(state.in_progress.begin(), state.in_progress.end(),
                       [&](const InProgressAction& a) {
                           return a.cell == cell && a.actor != helper && !a.helper;
                       });
}

void join_action(GameState& state, Actor helper, CellPoint cell) {
    if (state.over) throw RejectedAction("game over");
    for (auto& a : state.in_progress) {
        if (a.cell == cell && a.actor != helper && !a.helper) {
            a.helper = helper;
            a.ticks_remaining = (a.ticks_remaining + 1) / 2;
            return;
        }
    }
    throw RejectedAction("no joinable action at cell");
}

// ---------------------------------------------------------------------------
// Snapshots, scoring, hashing

GameSnapshot snapshot(const GameState& state) { return GameSnapshot(state); }
GameState restore(const GameSnapshot& snap) { return snap.state(); }

std::int64_t score(const GameState& state, const ScoreWeights& w) {
    return w.health * state.base_health + w.resources * state.resources + w.kills * state.kills -
           w.leaks * state.leaks;
}

namespace {

class ByteWriter {
public:
    template <typename T>
    void put(T v) {
        using U = std::make_unsigned_t<T>;
        auto u = static_cast<U>(v);
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            out_.push_back(static_cast<std::uint8_t>(u & 0xFFu));
            if constexpr (sizeof(T) > 1) u = static_cast<U>(u >> 8);
        }
    }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

constexpr std::uint16_t kCanonicalVersion = 1;

std::uint8_t helper_code(const std::optional<Actor>& a) {
    return a ? static_cast<std::uint8_t>(static_cast<int>(*a) + 1) : 0;
}

}  // namespace

std::vector<std::uint8_t> canonical_bytes(const GameState& s) {
    ByteWriter w;
    for (char ch : {'C', 'M', 'R', 'D'}) w.put(static_cast<std::uint8_t>(ch));
    w.put(kCanonicalVersion);
    w.put(s.tick);
    w.put(s.rng.state());
    w.put(s.resources);
    w.put(s.base_health);
    w.put(s.leaks);
    w.put(s.kills);
    w.put(s.spawned);
    w.put(s.wave);
    w.put(s.next_enemy_id);
    w.put(s.last_player_action_tick);
    w.put(static_cast<std::uint8_t>(s.over));
    w.put(static_cast<std::uint32_t>(s.structures.size()));
    for (const auto& st : s.structures) {
        w.put(static_cast<std::uint8_t>(st.kind));
        w.put(st.cell.x);
        w.put(st.cell.y);
        w.put(st.health);
        w.put(st.level);
        w.put(st.cooldown);
    }
    w.put(static_cast<std::uint32_t>(s.enemies.size()));
    for (const auto& e : s.enemies) {
        w.put(e.id);
        w.put(e.type);
        w.put(e.row);
        w.put(e.pos);
        w.put(e.health);
        w.put(e.cooldown);
    }
    w.put(static_cast<std::uint32_t>(s.pending.size()));
    for (const auto& p : s.pending) {
        w.put(p.tick);
        w.put(p.enemy_type);
        w.put(p.row);
        w.put(p.health);
    }
    w.put(static_cast<std::uint32_t>(s.in_progress.size()));
    for (const auto& a : s.in_progress) {
        w.put(static_cast<std::uint8_t>(a.actor));
        w.put(static_cast<std::uint8_t>(a.kind));
        w.put(a.cell.x);
        w.put(a.cell.y);
        w.put(a.ticks_remaining);
        w.put(helper_code(a.helper));
    }
    return w.take();
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t state_hash(const GameState& state) { return fnv1a64(canonical_bytes(state)); }

}  // namespace comrade
