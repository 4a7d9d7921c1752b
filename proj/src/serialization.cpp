#include "comrade/serialization.hpp"

#include "comrade/errors.hpp"

#include <fstream>

namespace comrade {

using nlohmann::json;

namespace {

std::string ability_name(EnemyAbility a) {
    switch (a) {
        case EnemyAbility::None: return "none";
        case EnemyAbility::Fast: return "fast";
        case EnemyAbility::Armored: return "armored";
    }
    return "none";
}

EnemyAbility parse_ability(const std::string& s) {
    if (s == "none") return EnemyAbility::None;
    if (s == "fast") return EnemyAbility::Fast;
    if (s == "armored") return EnemyAbility::Armored;
    throw ConfigError("unknown enemy ability '" + s + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

json per_kind(const std::array<std::int64_t, kKindCount>& v) {
    json j = json::object();
    for (auto k : kActiveKinds) j[std::string(to_string(k))] = v[kind_index(k)];
    return j;
}

template <typename T>
void read_per_kind(const json& j, const char* key, std::array<T, kKindCount>& out) {
    if (!j.contains(key)) return;
    for (const auto& [name, value] : j.at(key).items()) {
        const auto k = parse_action_kind(name);
        if (!k || *k == ActionKind::Idle) throw ConfigError("unknown action kind '" + name + "'");
        out[kind_index(*k)] = value.template get<T>();
    }
}

}  // namespace

json to_json(const GameConfig& c) {
    json types = json::array();
    for (const auto& t : c.enemy_types) {
        types.push_back({{"id", t.id}, {"speed", t.speed}, {"health", t.health},
                         {"damage", t.damage}, {"ability", ability_name(t.ability)}});
    }
    json sched = json::array();
    for (const auto& e : c.spawn_schedule) {
        sched.push_back({{"tick", e.tick}, {"enemy_type", e.enemy_type}, {"lane", e.lane}});
    }
    std::array<std::int64_t, kKindCount> durations{};
    for (std::size_t i = 0; i < kKindCount; ++i) durations[i] = c.durations[i];
    return {
        {"map_width", c.map_width},
        {"map_height", c.map_height},
        {"tick_rate", c.tick_rate},
        {"max_speed", c.max_speed},
        {"lanes", c.lanes},
        {"enemy_types", types},
        {"spawn_schedule", sched},
        {"first_wave_tick", c.first_wave_tick},
        {"wave_period", c.wave_period},
        {"wave_growth", c.wave_growth},
        {"extra_spacing", c.extra_spacing},
        {"wave_health_growth_pct", c.wave_health_growth_pct},
        {"costs", per_kind(c.costs)},
        {"durations", per_kind(durations)},
        {"starting_resources", c.starting_resources},
        {"income_per_tick", c.income_per_tick},
        {"kill_bounty", c.kill_bounty},
        {"base_max_health", c.base_max_health},
        {"leak_limit", c.leak_limit},
        {"tower_health", c.tower_health},
        {"wall_health", c.wall_health},
        {"tower_range", c.tower_range},
        {"tower_damage", c.tower_damage},
        {"tower_fire_period", c.tower_fire_period},
        {"tower_max_level", c.tower_max_level},
        {"enemy_attack_period", c.enemy_attack_period},
        {"score_weights",
         {{"health", c.score_weights.health},
          {"resources", c.score_weights.resources},
          {"kills", c.score_weights.kills},
          {"leaks", c.score_weights.leaks}}},
    };
}

GameConfig game_config_from_json(const json& j) {
    GameConfig c = GameConfig::standard();
    read(j, "map_width", c.map_width);
    read(j, "map_height", c.map_height);
    read(j, "tick_rate", c.tick_rate);
    read(j, "max_speed", c.max_speed);
    read(j, "lanes", c.lanes);
    if (j.contains("enemy_types")) {
        c.enemy_types.clear();
        for (const auto& t : j.at("enemy_types")) {
            EnemyType e;
            e.id = t.value("id", static_cast<int>(c.enemy_types.size()));
            read(t, "speed", e.speed);
            read(t, "health", e.health);
            read(t, "damage", e.damage);
            e.ability = parse_ability(t.value("ability", std::string("none")));
            c.enemy_types.push_back(e);
        }
    }
    if (j.contains("spawn_schedule")) {
        c.spawn_schedule.clear();
        for (const auto& e : j.at("spawn_schedule")) {
            c.spawn_schedule.push_back(
                {e.at("tick").get<int>(), e.at("enemy_type").get<int>(), e.at("lane").get<int>()});
        }
    }
    read(j, "first_wave_tick", c.first_wave_tick);
    read(j, "wave_period", c.wave_period);
    read(j, "wave_growth", c.wave_growth);
    read(j, "extra_spacing", c.extra_spacing);
    read(j, "wave_health_growth_pct", c.wave_health_growth_pct);
    read_per_kind(j, "costs", c.costs);
    read_per_kind(j, "durations", c.durations);
    read(j, "starting_resources", c.starting_resources);
    read(j, "income_per_tick", c.income_per_tick);
    read(j, "kill_bounty", c.kill_bounty);
    read(j, "base_max_health", c.base_max_health);
    read(j, "leak_limit", c.leak_limit);
    read(j, "tower_health", c.tower_health);
    read(j, "wall_health", c.wall_health);
    read(j, "tower_range", c.tower_range);
    read(j, "tower_damage", c.tower_damage);
    read(j, "tower_fire_period", c.tower_fire_period);
    read(j, "tower_max_level", c.tower_max_level);
    read(j, "enemy_attack_period", c.enemy_attack_period);
    if (j.contains("score_weights")) {
        const auto& w = j.at("score_weights");
        read(w, "health", c.score_weights.health);
        read(w, "resources", c.score_weights.resources);
        read(w, "kills", c.score_weights.kills);
        read(w, "leaks", c.score_weights.leaks);
    }
    c.validate();
    return c;
}

json to_json(const ClassifierKind& k) {
    if (const auto* t = std::get_if<DecisionTreeParams>(&k)) {
        return {{"type", "decision_tree"}, {"max_depth", t->max_depth},
                {"min_samples_split", t->min_samples_split}};
    }
    if (const auto* n = std::get_if<KNearestParams>(&k)) return {{"type", "k_nearest"}, {"k", n->k}};
    return {{"type", "majority"}};
}

ClassifierKind classifier_from_json(const json& j) {
    const auto type = j.at("type").get<std::string>();
    ClassifierKind k;
    if (type == "decision_tree") {
        DecisionTreeParams p;
        read(j, "max_depth", p.max_depth);
        read(j, "min_samples_split", p.min_samples_split);
        k = p;
    } else if (type == "k_nearest") {
        KNearestParams p;
        read(j, "k", p.k);
        k = p;
    } else if (type == "majority") {
        k = MajorityParams{};
    } else {
        throw ConfigError("unknown classifier type '" + type + "'");
    }
    validate(k);
    return k;
}

json to_json(const CompanionConfig& c) {
    return {
        {"p_help", c.p_help},
        {"p_parallel", c.p_parallel},
        {"p_experiment", c.p_experiment},
        {"horizon_ticks", c.horizon_ticks},
        {"retrain_every", c.retrain_every},
        {"intro_threshold", c.intro_threshold},
        {"classifier", to_json(c.classifier)},
        {"features", c.features.indices()},
        {"score_weights",
         {{"health", c.score_weights.health},
          {"resources", c.score_weights.resources},
          {"kills", c.score_weights.kills},
          {"leaks", c.score_weights.leaks}}},
        {"decision_epoch_ticks", c.decision_epoch_ticks},
        {"rollout_threads", c.rollout_threads},
    };
}

CompanionConfig companion_config_from_json(const json& j) {
    CompanionConfig c;
    read(j, "p_help", c.p_help);
    read(j, "p_parallel", c.p_parallel);
    read(j, "p_experiment", c.p_experiment);
    read(j, "horizon_ticks", c.horizon_ticks);
    read(j, "retrain_every", c.retrain_every);
    read(j, "intro_threshold", c.intro_threshold);
    if (j.contains("classifier")) c.classifier = classifier_from_json(j.at("classifier"));
    if (j.contains("features")) c.features = FeatureConfig(j.at("features").get<std::vector<std::size_t>>());
    if (j.contains("score_weights")) {
        const auto& w = j.at("score_weights");
        read(w, "health", c.score_weights.health);
        read(w, "resources", c.score_weights.resources);
        read(w, "kills", c.score_weights.kills);
        read(w, "leaks", c.score_weights.leaks);
    }
    read(j, "decision_epoch_ticks", c.decision_epoch_ticks);
    read(j, "rollout_threads", c.rollout_threads);
    c.validate();
    return c;
}

void Scenario::validate() const {
    game.validate();
    companion.validate(&game);
}

json to_json(const Scenario& s) {
    return {{"version", 1}, {"game", to_json(s.game)}, {"companion", to_json(s.companion)}};
}

Scenario scenario_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("scenario must be a JSON object", 0);
    try {
        if (j.value("version", 1) != 1) throw ConfigError("unsupported scenario version");
        Scenario s;
        if (j.contains("game")) s.game = game_config_from_json(j.at("game"));
        if (j.contains("companion")) s.companion = companion_config_from_json(j.at("companion"));
        // Rollouts score with the game's weights unless the companion overrides them.
        if (!j.contains("companion") || !j.at("companion").contains("score_weights")) {
            s.companion.score_weights = s.game.score_weights;
        }
        s.validate();
        return s;
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("invalid scenario: ") + ex.what());
    }
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& ex) {
        throw ParseError(ex.what(), 0);
    }
    return scenario_from_json(j);
}

// ---------------------------------------------------------------------------

json to_json(const GameState& s) {
    json structures = json::array();
    for (const auto& st : s.structures) {
        structures.push_back({{"kind", st.kind == StructureKind::Tower ? "tower" : "wall"},
                              {"x", st.cell.x},
                              {"y", st.cell.y},
                              {"health", st.health},
                              {"level", st.level},
                              {"cooldown", st.cooldown}});
    }
    json enemies = json::array();
    for (const auto& e : s.enemies) {
        enemies.push_back({{"id", e.id}, {"type", e.type}, {"row", e.row}, {"pos", e.pos},
                           {"health", e.health}, {"cooldown", e.cooldown}});
    }
    json pending = json::array();
    for (const auto& p : s.pending) {
        pending.push_back({{"tick", p.tick}, {"type", p.enemy_type}, {"row", p.row}, {"health", p.health}});
    }
    json actions = json::array();
    for (const auto& a : s.in_progress) {
        json ja{{"actor", std::string(to_string(a.actor))},
                {"kind", std::string(to_string(a.kind))},
                {"x", a.cell.x},
                {"y", a.cell.y},
                {"ticks_remaining", a.ticks_remaining}};
        ja["helper"] = a.helper ? json(std::string(to_string(*a.helper))) : json(nullptr);
        actions.push_back(ja);
    }
    return {
        {"version", 1},
        {"tick", s.tick},
        {"rng_state", s.rng.state()},
        {"resources", s.resources},
        {"base_health", s.base_health},
        {"leaks", s.leaks},
        {"kills", s.kills},
        {"spawned", s.spawned},
        {"wave", s.wave},
        {"next_enemy_id", s.next_enemy_id},
        {"last_player_action_tick", s.last_player_action_tick},
        {"structures", structures},
        {"enemies", enemies},
        {"pending", pending},
        {"in_progress", actions},
        {"speed", s.speed},
        {"over", s.over},
    };
}

namespace {

Actor parse_actor(const std::string& s) {
    if (s == "player") return Actor::Player;
    if (s == "companion") return Actor::Companion;
    throw ParseError("unknown actor '" + s + "'", 0);
}

}  // namespace

GameState state_from_json(const json& j, std::shared_ptr<const GameConfig> config) {
    try {
        if (j.at("version").get<int>() != 1) throw ParseError("unsupported state version", 0);
        GameState s = new_game(std::move(config), 0);
        s.tick = j.at("tick").get<std::int64_t>();
        s.rng.set_state(j.at("rng_state").get<std::uint64_t>());
        s.resources = j.at("resources").get<std::int64_t>();
        s.base_health = j.at("base_health").get<int>();
        s.leaks = j.at("leaks").get<int>();
        s.kills = j.at("kills").get<int>();
        s.spawned = j.at("spawned").get<int>();
        s.wave = j.at("wave").get<int>();
        s.next_enemy_id = j.at("next_enemy_id").get<std::uint32_t>();
        s.last_player_action_tick = j.at("last_player_action_tick").get<std::int64_t>();
        for (const auto& st : j.at("structures")) {
            const auto kind = st.at("kind").get<std::string>() == "tower" ? StructureKind::Tower
                                                                          : StructureKind::Wall;
            place_structure(s, kind, {st.at("x").get<int>(), st.at("y").get<int>()},
                            st.at("health").get<int>());
            s.structures.back().level = st.at("level").get<int>();
            s.structures.back().cooldown = st.at("cooldown").get<int>();
        }
        for (const auto& e : j.at("enemies")) {
            s.enemies.push_back({e.at("id").get<std::uint32_t>(), e.at("type").get<int>(),
                                 e.at("row").get<int>(), e.at("pos").get<int>(),
                                 e.at("health").get<int>(), e.at("cooldown").get<int>()});
        }
        for (const auto& p : j.at("pending")) {
            s.pending.push_back(
                {p.at("tick").get<std::int64_t>(), p.at("type").get<int>(), p.at("row").get<int>(),
                 p.at("health").get<int>()});
        }
        for (const auto& a : j.at("in_progress")) {
            const auto kind = parse_action_kind(a.at("kind").get<std::string>());
            if (!kind) throw ParseError("unknown action kind", 0);
            InProgressAction ip{parse_actor(a.at("actor").get<std::string>()), *kind,
                                {a.at("x").get<int>(), a.at("y").get<int>()},
                                a.at("ticks_remaining").get<int>(), std::nullopt};
            if (!a.at("helper").is_null()) ip.helper = parse_actor(a.at("helper").get<std::string>());
            s.in_progress.push_back(ip);
        }
        s.speed = j.at("speed").get<int>();
        s.over = j.at("over").get<bool>();
        return s;
    } catch (const json::exception& ex) {
        throw ParseError(std::string("invalid state: ") + ex.what(), 0);
    } catch (const DomainError& ex) {
        throw ParseError(std::string("invalid state: ") + ex.what(), 0);
    }
}

std::uint64_t config_digest(const Scenario& s) {
    const auto text = to_json(s).dump();
    return fnv1a64({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

}  // namespace comrade
