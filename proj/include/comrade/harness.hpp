#pragma once

// Seeded headless episodes with scripted players, used to compare companion
// modes and to drive the acceptance checks.

#include "comrade/companion.hpp"
#include "comrade/serialization.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace comrade {

enum class PolicyType { Turtle, Rusher, Spreader, Scripted, FeatureDriven };

struct ScriptedAction {
    std::int64_t tick = 0;
    ActionKind kind = ActionKind::BuildTower;
    CellPoint cell;
};

// kind = f[a] < ta ? BuildWall : (f[b] < tb ? BuildTower : UpgradeTower)
struct FeatureRule {
    std::size_t feature_a = static_cast<std::size_t>(Feature::EnemyCount);
    double threshold_a = 4.0;
    std::size_t feature_b = static_cast<std::size_t>(Feature::TowerCount);
    double threshold_b = 40.0;

    ActionKind operator()(const StateVector& full) const;
};

struct PlayerPolicy {
    PolicyType type = PolicyType::Turtle;
    int think_period = 20;
    std::vector<ScriptedAction> script;  // Scripted: applied at exactly `tick`
    FeatureRule rule;                    // FeatureDriven

    static PlayerPolicy turtle() { return {}; }
    static PlayerPolicy rusher() { return {PolicyType::Rusher, 20, {}, {}}; }
    static PlayerPolicy spreader() { return {PolicyType::Spreader, 20, {}, {}}; }
    static PlayerPolicy scripted(std::vector<ScriptedAction> s) {
        return {PolicyType::Scripted, 1, std::move(s), {}};
    }
    static PlayerPolicy feature_driven(FeatureRule r = {}) {
        return {PolicyType::FeatureDriven, 20, {}, r};
    }
};

std::string_view to_string(PolicyType t);
// "turtle", "rusher", "spreader", "feature"; Scripted policies come from files.
std::optional<PlayerPolicy> parse_policy(std::string_view name);

// JSON array of {tick, kind, x, y}.
std::vector<ScriptedAction> load_script(const std::filesystem::path& path);

// Deterministic scripted player.
class PlayerAgent {
public:
    PlayerAgent(PlayerPolicy policy, std::uint64_t seed);

    // The action to attempt this tick, if any.
    std::optional<std::pair<ActionKind, CellPoint>> propose(const GameState& state);

private:
    std::optional<CellPoint> random_empty(const GameState& s, int x0, int x1,
                                          const std::vector<int>& rows);

    PlayerPolicy policy_;
    Rng rng_;
    std::size_t next_script_ = 0;
    int actions_ = 0;
};

enum class CompanionMode { Complementary, Random, Mimic, None };

inline constexpr std::array<CompanionMode, 4> kAllModes = {
    CompanionMode::Complementary, CompanionMode::Random, CompanionMode::Mimic, CompanionMode::None};

std::string_view to_string(CompanionMode m);
std::optional<CompanionMode> parse_mode(std::string_view s);

struct EpisodeReport {
    std::uint64_t seed = 0;
    std::string policy;
    std::string mode;
    std::int64_t max_ticks = 0;
    std::int64_t survival_ticks = 0;
    bool game_over = false;
    std::int64_t final_score = 0;
    int leaks = 0;
    int kills = 0;
    int spawned = 0;
    int live_enemies = 0;
    std::int64_t resources = 0;
    int base_health = 0;
    std::array<int, kKindCount> player_actions{};
    std::array<int, kKindCount> companion_actions{};
    std::optional<double> action_l1;
    std::array<int, kBranchCount> branch_counts{};
    int decisions = 0;
    int companion_rejected = 0;
    int companion_unseen_actions = 0;  // companion actions of kinds absent from the trace
    std::uint64_t config_digest = 0;
    std::uint64_t final_state_hash = 0;

    nlohmann::json to_json() const;
    std::string dump() const { return to_json().dump(2); }
};

struct EpisodeRecord {
    EpisodeReport report;
    Trace trace;
    std::vector<DecisionOutcome> decisions;
    GameState final_state;
};

EpisodeRecord run_episode_full(const Scenario& scenario, const PlayerPolicy& policy,
                               CompanionMode mode, std::uint64_t seed, std::int64_t max_ticks);

EpisodeReport run_episode(const Scenario& scenario, const PlayerPolicy& policy, CompanionMode mode,
                          std::uint64_t seed, std::int64_t max_ticks);

struct ModeSummary {
    CompanionMode mode = CompanionMode::None;
    std::size_t episodes = 0;
    double mean_survival = 0.0;
    double sd_survival = 0.0;
    double mean_score = 0.0;
    double sd_score = 0.0;
    std::vector<EpisodeReport> reports;
};

struct Comparison {
    std::vector<ModeSummary> rows;
    nlohmann::json to_json() const;
};

// Runs seeds 1..n_seeds for each mode. n_seeds >= 2.
Comparison compare_modes(const Scenario& scenario, const PlayerPolicy& policy,
                         const std::vector<CompanionMode>& modes, int n_seeds,
                         std::int64_t max_ticks);

void export_trace(const Trace& trace, const std::filesystem::path& path);
Trace import_trace(const std::filesystem::path& path);

// Sample mean and (n-1) standard deviation.
std::pair<double, double> mean_sd(const std::vector<double>& xs);

inline constexpr std::int64_t kDefaultMaxTicks = 20000;

}  // namespace comrade
