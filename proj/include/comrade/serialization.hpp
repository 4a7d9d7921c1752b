#pragma once

// JSON forms of configs and states. Scenario files look like
//
//   {
//     "version": 1,
//     "game": { ...GameConfig fields, all optional... },
//     "companion": { ...CompanionConfig fields, all optional... }
//   }
//
// Missing fields take the built-in defaults; see scenarios/default.json for
// the full field list.

#include "comrade/companion.hpp"
#include "comrade/engine.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace comrade {

struct Scenario {
    GameConfig game = GameConfig::standard();
    CompanionConfig companion;

    void validate() const;
    static Scenario standard() { return {}; }
};

nlohmann::json to_json(const GameConfig& c);
GameConfig game_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CompanionConfig& c);
CompanionConfig companion_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ClassifierKind& k);
ClassifierKind classifier_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Scenario& s);
// Throws ConfigError for invalid values, ParseError for malformed JSON.
Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);

// Full state including config; the config is shared by the restored state.
nlohmann::json to_json(const GameState& s);
GameState state_from_json(const nlohmann::json& j, std::shared_ptr<const GameConfig> config);

std::uint64_t config_digest(const Scenario& s);

}  // namespace comrade
