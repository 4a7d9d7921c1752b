#include "comrade/harness.hpp"

#include "comrade/errors.hpp"
#include "comrade/log.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace comrade {

using nlohmann::json;

ActionKind FeatureRule::operator()(const StateVector& full) const {
    if (full.at(feature_a) < threshold_a) return ActionKind::BuildWall;
    return full.at(feature_b) < threshold_b ? ActionKind::BuildTower : ActionKind::UpgradeTower;
}

std::string_view to_string(PolicyType t) {
    switch (t) {
        case PolicyType::Turtle: return "turtle";
        case PolicyType::Rusher: return "rusher";
        case PolicyType::Spreader: return "spreader";
        case PolicyType::Scripted: return "scripted";
        case PolicyType::FeatureDriven: return "feature";
    }
    return "turtle";
}

std::optional<PlayerPolicy> parse_policy(std::string_view name) {
    if (name == "turtle") return PlayerPolicy::turtle();
    if (name == "rusher") return PlayerPolicy::rusher();
    if (name == "spreader") return PlayerPolicy::spreader();
    if (name == "feature") return PlayerPolicy::feature_driven();
    return std::nullopt;
}

std::vector<ScriptedAction> load_script(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open script " + path.string());
    std::vector<ScriptedAction> out;
    try {
        for (const auto& a : json::parse(in)) {
            const auto kind = parse_action_kind(a.at("kind").get<std::string>());
            if (!kind) throw ParseError("unknown action kind in script", 0);
            out.push_back({a.at("tick").get<std::int64_t>(), *kind,
                           {a.at("x").get<int>(), a.at("y").get<int>()}});
        }
    } catch (const json::exception& ex) {
        throw ParseError(ex.what(), 0);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const ScriptedAction& a, const ScriptedAction& b) { return a.tick < b.tick; });
    return out;
}

std::string_view to_string(CompanionMode m) {
    switch (m) {
        case CompanionMode::Complementary: return "complementary";
        case CompanionMode::Random: return "random";
        case CompanionMode::Mimic: return "mimic";
        case CompanionMode::None: return "none";
    }
    return "none";
}

std::optional<CompanionMode> parse_mode(std::string_view s) {
    for (auto m : kAllModes) {
        if (to_string(m) == s) return m;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Scripted players

PlayerAgent::PlayerAgent(PlayerPolicy policy, std::uint64_t seed)
    : policy_(std::move(policy)), rng_(seed) {}

std::optional<CellPoint> PlayerAgent::random_empty(const GameState& s, int x0, int x1,
                                                   const std::vector<int>& rows) {
    const auto& c = s.cfg();
    x0 = std::clamp(x0, 0, c.map_width);
    x1 = std::clamp(x1, 0, c.map_width);
    std::vector<int> valid_rows;
    for (int r : rows) {
        if (r >= 0 && r < c.map_height) valid_rows.push_back(r);
    }
    if (x1 <= x0 || valid_rows.empty()) return std::nullopt;
    for (int attempt = 0; attempt < 12; ++attempt) {
        const CellPoint p{x0 + static_cast<int>(rng_.below(static_cast<std::uint64_t>(x1 - x0))),
                          valid_rows[rng_.below(valid_rows.size())]};
        if (!s.structure_at(p) && !s.reserved(p)) return p;
    }
    return std::nullopt;
}

std::optional<std::pair<ActionKind, CellPoint>> PlayerAgent::propose(const GameState& s) {
    using Proposal = std::pair<ActionKind, CellPoint>;
    if (s.over) return std::nullopt;
    const auto& c = s.cfg();

    if (policy_.type == PolicyType::Scripted) {
        while (next_script_ < policy_.script.size() && policy_.script[next_script_].tick < s.tick) {
            ++next_script_;
        }
        if (next_script_ < policy_.script.size() && policy_.script[next_script_].tick == s.tick) {
            const auto& a = policy_.script[next_script_++];
            return Proposal{a.kind, a.cell};
        }
        return std::nullopt;
    }

    if (s.tick % policy_.think_period != 0 || s.busy(Actor::Player)) return std::nullopt;
    const int w = c.map_width;
    const int lane = c.lanes[rng_.below(c.lanes.size())];
    auto afford = [&](ActionKind k) { return s.resources >= c.cost(k); };

    switch (policy_.type) {
        case PolicyType::Turtle: {
            // Repair the most damaged structure near the base first.
            const Structure* worst = nullptr;
            for (const auto& st : s.structures) {
                if (st.cell.x >= w / 3 || s.reserved(st.cell)) continue;
                const int pct = 100 * st.health / max_structure_health(c, st.kind);
                if (pct >= 60) continue;
                if (!worst || pct < 100 * worst->health / max_structure_health(c, worst->kind)) {
                    worst = &st;
                }
            }
            if (worst && afford(ActionKind::Repair)) return Proposal{ActionKind::Repair, worst->cell};
            if (afford(ActionKind::BuildTower) && rng_.below(3) != 0) {
                if (auto p = random_empty(s, 1, 10, {lane - 2, lane - 1, lane + 1, lane + 2})) {
                    return Proposal{ActionKind::BuildTower, *p};
                }
            }
            if (afford(ActionKind::BuildWall)) {
                if (auto p = random_empty(s, 8, 13, {lane})) return Proposal{ActionKind::BuildWall, *p};
            }
            return std::nullopt;
        }
        case PolicyType::Rusher: {
            if (afford(ActionKind::BuildTower) && rng_.below(2) == 0) {
                if (auto p = random_empty(s, w - 14, w - 3, {lane - 1, lane + 1})) {
                    return Proposal{ActionKind::BuildTower, *p};
                }
            }
            if (afford(ActionKind::BuildWall)) {
                if (auto p = random_empty(s, w - 10, w - 2, {lane})) return Proposal{ActionKind::BuildWall, *p};
            }
            return std::nullopt;
        }
        case PolicyType::Spreader: {
            const int band = actions_ % 3;
            const int x0 = band * w / 3;
            const int x1 = (band + 1) * w / 3;
            std::vector<int> rows(static_cast<std::size_t>(c.map_height));
            for (int r = 0; r < c.map_height; ++r) rows[static_cast<std::size_t>(r)] = r;
            const auto kind = rng_.below(2) == 0 ? ActionKind::BuildTower : ActionKind::BuildWall;
            if (!afford(kind)) return std::nullopt;
            if (auto p = random_empty(s, x0, x1, rows)) {
                ++actions_;
                return Proposal{kind, *p};
            }
            return std::nullopt;
        }
        case PolicyType::FeatureDriven: {
            const auto kind = policy_.rule(full_feature_vector(s));
            if (!afford(kind)) return std::nullopt;
            if (kind == ActionKind::UpgradeTower) {
                std::vector<CellPoint> towers;
                for (const auto& st : s.structures) {
                    if (is_possible_at(s, kind, st.cell)) towers.push_back(st.cell);
                }
                if (towers.empty()) return std::nullopt;
                return Proposal{kind, towers[rng_.below(towers.size())]};
            }
            const std::vector<int> rows = kind == ActionKind::BuildWall
                                              ? std::vector<int>{lane}
                                              : std::vector<int>{lane - 1, lane + 1};
            if (auto p = random_empty(s, 2, w - 2, rows)) return Proposal{kind, *p};
            return std::nullopt;
        }
        case PolicyType::Scripted:
            break;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Episodes

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json kind_counts(const std::array<int, kKindCount>& counts) {
    json j = json::object();
    for (auto k : kActiveKinds) j[std::string(to_string(k))] = counts[kind_index(k)];
    return j;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    Rng r(seed ^ (stream * 0xD1B54A32D192ED03ull));
    return r.next();
}

std::optional<ActionHistogram> histogram(const std::array<int, kKindCount>& counts) {
    std::vector<ActionKind> kinds;
    for (auto k : kActiveKinds) kinds.insert(kinds.end(), static_cast<std::size_t>(counts[kind_index(k)]), k);
    if (kinds.empty()) return std::nullopt;
    return action_distribution(kinds);
}

}  // namespace

json EpisodeReport::to_json() const {
    json branches = json::object();
    for (std::size_t i = 0; i < kBranchCount; ++i) {
        branches[std::string(to_string(static_cast<Branch>(i)))] = branch_counts[i];
    }
    return {
        {"seed", seed},
        {"policy", policy},
        {"mode", mode},
        {"max_ticks", max_ticks},
        {"survival_ticks", survival_ticks},
        {"game_over", game_over},
        {"final_score", final_score},
        {"leaks", leaks},
        {"kills", kills},
        {"spawned", spawned},
        {"live_enemies", live_enemies},
        {"resources", resources},
        {"base_health", base_health},
        {"player_actions", kind_counts(player_actions)},
        {"companion_actions", kind_counts(companion_actions)},
        {"action_l1", action_l1 ? json(*action_l1) : json(nullptr)},
        {"branch_counts", branches},
        {"decisions", decisions},
        {"companion_rejected", companion_rejected},
        {"companion_unseen_actions", companion_unseen_actions},
        {"config_digest", hex64(config_digest)},
        {"final_state_hash", hex64(final_state_hash)},
    };
}

EpisodeRecord run_episode_full(const Scenario& scenario, const PlayerPolicy& policy,
                               CompanionMode mode, std::uint64_t seed, std::int64_t max_ticks) {
    scenario.validate();
    if (max_ticks < 0) throw ConfigError("max_ticks must be non-negative");

    auto config = std::make_shared<const GameConfig>(scenario.game);
    EpisodeRecord rec{{}, {}, {}, new_game(config, seed)};
    GameState& state = rec.final_state;
    Trace& trace = rec.trace;
    RegionSet regions(config->map_width, config->map_height);
    PlayerAgent player(policy, derive_seed(seed, 1));
    CompanionAgent companion(scenario.companion, derive_seed(seed, 2));
    Rng random_rng(derive_seed(seed, 3));
    const auto& ccfg = scenario.companion;

    // Mimic baseline: always perform the predicted pair.
    std::optional<PredictorModel> mimic_model;
    std::size_t mimic_trained = 0;

    EpisodeReport& r = rec.report;
    r.seed = seed;
    r.policy = std::string(to_string(policy.type));
    r.mode = std::string(to_string(mode));
    r.max_ticks = max_ticks;
    r.config_digest = config_digest(scenario);

    std::array<bool, kKindCount> player_seen{};

    auto companion_started = [&](ActionKind k) {
        ++r.companion_actions[kind_index(k)];
        if (!player_seen[kind_index(k)]) ++r.companion_unseen_actions;
    };

    while (!state.over && state.tick < max_ticks) {
        if (auto proposal = player.propose(state)) {
            const auto [kind, cell] = *proposal;
            if (kind != ActionKind::Idle && !state.busy(Actor::Player) &&
                is_possible_at(state, kind, cell)) {
                trace.record(full_feature_vector(state), kind, cell, state.tick);
                regions.record_action_point(cell);
                apply_action_at(state, Actor::Player, kind, cell);
                ++r.player_actions[kind_index(kind)];
                player_seen[kind_index(kind)] = true;
            }
        }

        if (mode != CompanionMode::None && !state.busy(Actor::Companion) &&
            state.tick % ccfg.decision_epoch_ticks == 0) {
            switch (mode) {
                case CompanionMode::Complementary: {
                    auto outcome = companion.think(state, trace, regions);
                    ++r.decisions;
                    ++r.branch_counts[static_cast<std::size_t>(outcome.branch)];
                    try {
                        if (auto k = execute(state, regions, outcome)) companion_started(*k);
                    } catch (const RejectedAction& ex) {
                        ++r.companion_rejected;
                        log::debug("companion action rejected: {}", ex.what());
                    }
                    rec.decisions.push_back(std::move(outcome));
                    break;
                }
                case CompanionMode::Random: {
                    const RegionId region = regions.sample(random_rng);
                    std::vector<ActionKind> possible;
                    for (auto k : kActiveKinds) {
                        if (is_possible(state, k, regions.bounds(region))) possible.push_back(k);
                    }
                    if (!possible.empty()) {
                        const auto k = possible[random_rng.below(possible.size())];
                        apply_action(state, Actor::Companion, k, regions.bounds(region));
                        companion_started(k);
                    }
                    break;
                }
                case CompanionMode::Mimic: {
                    if (auto m = maybe_retrain(trace, regions, ccfg, mimic_trained)) {
                        mimic_model = std::move(m);
                        mimic_trained = trace.size();
                    }
                    if (mimic_model && trace.size() >= static_cast<std::size_t>(ccfg.intro_threshold)) {
                        const auto p = predict_next(*mimic_model, full_feature_vector(state));
                        if (pair_possible(state, regions, p)) {
                            apply_action(state, Actor::Companion, p.kind, regions.bounds(p.region));
                            companion_started(p.kind);
                        }
                    }
                    break;
                }
                case CompanionMode::None:
                    break;
            }
        }
        step(state, 1);
    }

    r.survival_ticks = state.tick;
    r.game_over = state.over;
    r.final_score = score(state, config->score_weights);
    r.leaks = state.leaks;
    r.kills = state.kills;
    r.spawned = state.spawned;
    r.live_enemies = static_cast<int>(state.enemies.size());
    r.resources = state.resources;
    r.base_health = state.base_health;
    const auto hp = histogram(r.player_actions);
    const auto hc = histogram(r.companion_actions);
    if (hp && hc) r.action_l1 = l1_distance(*hp, *hc);
    r.final_state_hash = state_hash(state);
    return rec;
}

EpisodeReport run_episode(const Scenario& scenario, const PlayerPolicy& policy, CompanionMode mode,
                          std::uint64_t seed, std::int64_t max_ticks) {
    return run_episode_full(scenario, policy, mode, seed, max_ticks).report;
}

std::pair<double, double> mean_sd(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

Comparison compare_modes(const Scenario& scenario, const PlayerPolicy& policy,
                         const std::vector<CompanionMode>& modes, int n_seeds,
                         std::int64_t max_ticks) {
    if (n_seeds < 2) throw ConfigError("compare needs at least 2 seeds");
    Comparison cmp;
    for (auto mode : modes) {
        ModeSummary row;
        row.mode = mode;
        std::vector<double> survival;
        std::vector<double> scores;
        for (int seed = 1; seed <= n_seeds; ++seed) {
            auto rep = run_episode(scenario, policy, mode, static_cast<std::uint64_t>(seed), max_ticks);
            survival.push_back(static_cast<double>(rep.survival_ticks));
            scores.push_back(static_cast<double>(rep.final_score));
            log::debug("{} seed {}: survival {} score {}", to_string(mode), seed, rep.survival_ticks,
                       rep.final_score);
            row.reports.push_back(std::move(rep));
        }
        row.episodes = row.reports.size();
        std::tie(row.mean_survival, row.sd_survival) = mean_sd(survival);
        std::tie(row.mean_score, row.sd_score) = mean_sd(scores);
        cmp.rows.push_back(std::move(row));
    }
    return cmp;
}

json Comparison::to_json() const {
    json rows_json = json::array();
    for (const auto& r : rows) {
        json survival = json::array();
        for (const auto& e : r.reports) survival.push_back(e.survival_ticks);
        rows_json.push_back({{"mode", std::string(to_string(r.mode))},
                             {"episodes", r.episodes},
                             {"mean_survival_ticks", r.mean_survival},
                             {"sd_survival_ticks", r.sd_survival},
                             {"mean_final_score", r.mean_score},
                             {"sd_final_score", r.sd_score},
                             {"survival_ticks", survival}});
    }
    return {{"rows", rows_json}};
}

void export_trace(const Trace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write trace file " + path.string());
    write_trace_jsonl(out, trace);
}

Trace import_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open trace file " + path.string());
    return read_trace_jsonl(in);
}

}  // namespace comrade
