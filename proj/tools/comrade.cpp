// comrade: headless simulation, mode comparison, classifier evaluation,
// region replay and the live session server.
//
// Exit codes: 0 success, 1 other failure, 2 configuration error, 3 parse error.

#include "comrade/errors.hpp"
#include "comrade/harness.hpp"
#include "comrade/log.hpp"
#include "comrade/session.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace comrade;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitParse = 3;

Scenario scenario_or_default(const std::string& path) {
    return path.empty() ? Scenario::standard() : load_scenario(path);
}

PlayerPolicy policy_from(const std::string& name, const std::string& script) {
    if (!script.empty()) return PlayerPolicy::scripted(load_script(script));
    auto p = parse_policy(name);
    if (!p) throw ConfigError("unknown player policy '" + name + "'");
    return *p;
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << text << '\n';
}

std::vector<Candidate> load_candidates(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open candidates file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& ex) {
        throw ParseError(ex.what(), 0);
    }
    std::vector<Candidate> out;
    for (const auto& c : j) {
        Candidate cand{classifier_from_json(c.at("classifier")), FeatureConfig{}};
        if (c.contains("features")) {
            cand.features = FeatureConfig(c.at("features").get<std::vector<std::size_t>>());
        }
        out.push_back(std::move(cand));
    }
    return out;
}

std::vector<CellPoint> load_points(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open points file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& ex) {
        throw ParseError(ex.what(), 0);
    }
    std::vector<CellPoint> out;
    for (const auto& p : j) {
        if (p.is_array()) {
            out.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
        } else {
            out.push_back({p.at("x").get<int>(), p.at("y").get<int>()});
        }
    }
    return out;
}

std::vector<CompanionMode> parse_modes(const std::string& list) {
    std::vector<CompanionMode> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto m = parse_mode(item);
        if (!m) throw ConfigError("unknown companion mode '" + item + "'");
        out.push_back(*m);
    }
    if (out.empty()) throw ConfigError("no modes given");
    return out;
}

SessionServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    log::init_from_env();

    CLI::App app{"comrade - complementary companion framework"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_path;

    auto* sim = app.add_subcommand("simulate", "run one seeded headless episode");
    std::string player = "turtle";
    std::string script_path;
    std::string companion = "complementary";
    std::uint64_t seed = 1;
    std::int64_t max_ticks = kDefaultMaxTicks;
    std::string trace_out;
    std::string decisions_out;
    sim->add_option("--scenario", scenario_path, "scenario JSON file");
    sim->add_option("--player", player, "turtle | rusher | spreader | feature");
    sim->add_option("--script", script_path, "scripted player actions (JSON array)");
    sim->add_option("--companion", companion, "complementary | random | mimic | none");
    sim->add_option("--seed", seed);
    sim->add_option("--max-ticks", max_ticks);
    sim->add_option("--out", out_path, "report file (default stdout)");
    sim->add_option("--trace-out", trace_out, "write the player trace as JSON Lines");
    sim->add_option("--decisions-out", decisions_out, "write the decision log as JSON Lines");

    auto* cmp = app.add_subcommand("compare", "compare companion modes over seeds 1..N");
    std::string modes = "complementary,random,mimic,none";
    int seeds = 30;
    cmp->add_option("--scenario", scenario_path);
    cmp->add_option("--player", player);
    cmp->add_option("--modes", modes);
    cmp->add_option("--seeds", seeds);
    cmp->add_option("--max-ticks", max_ticks);
    cmp->add_option("--out", out_path);

    auto* ev = app.add_subcommand("eval-classifiers", "rank classifier candidates on a trace");
    std::string trace_path;
    std::string candidates_path;
    ev->add_option("--trace", trace_path)->required();
    ev->add_option("--candidates", candidates_path)->required();
    ev->add_option("--scenario", scenario_path, "map dimensions for region labels");
    ev->add_option("--out", out_path);

    auto* rr = app.add_subcommand("replay-regions", "replay action points into a region set");
    std::string points_path;
    int width = 0;
    int height = 0;
    rr->add_option("--points", points_path)->required();
    rr->add_option("--width", width);
    rr->add_option("--height", height);
    rr->add_option("--scenario", scenario_path);
    rr->add_option("--out", out_path);

    auto* srv = app.add_subcommand("serve", "run the live session service");
    int port = 8080;
    std::string bind = "0.0.0.0";
    std::string data_dir = "sessions";
    srv->add_option("--port", port);
    srv->add_option("--bind", bind);
    srv->add_option("--scenario", scenario_path);
    srv->add_option("--data-dir", data_dir, "where disconnected sessions are saved");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    try {
        if (*sim) {
            const auto scenario = scenario_or_default(scenario_path);
            auto mode = parse_mode(companion);
            if (!mode) throw ConfigError("unknown companion mode '" + companion + "'");
            const auto rec = run_episode_full(scenario, policy_from(player, script_path), *mode, seed,
                                              max_ticks);
            if (!trace_out.empty()) export_trace(rec.trace, trace_out);
            if (!decisions_out.empty()) {
                std::ofstream out(decisions_out);
                for (const auto& d : rec.decisions) out << d.to_json().dump() << '\n';
            }
            write_output(out_path, rec.report.dump());
        } else if (*cmp) {
            const auto scenario = scenario_or_default(scenario_path);
            const auto result =
                compare_modes(scenario, policy_from(player, ""), parse_modes(modes), seeds, max_ticks);
            write_output(out_path, result.to_json().dump(2));
        } else if (*ev) {
            const auto scenario = scenario_or_default(scenario_path);
            const auto trace = import_trace(trace_path);
            RegionSet regions(scenario.game.map_width, scenario.game.map_height);
            for (const auto& e : trace.entries()) regions.record_action_point(e.point);
            const auto candidates = load_candidates(candidates_path);
            const auto result = evaluate_configs(trace, regions, candidates);
            json table = json::array();
            for (const auto& row : result.table) {
                table.push_back({{"candidate", row.candidate},
                                 {"classifier", describe(candidates[row.candidate].classifier)},
                                 {"features", candidates[row.candidate].features.indices()},
                                 {"window_accuracy", row.window_accuracy},
                                 {"accuracy", row.accuracy}});
            }
            write_output(out_path, json{{"best", result.best}, {"table", table}}.dump(2));
        } else if (*rr) {
            if (width <= 0 || height <= 0) {
                const auto scenario = scenario_or_default(scenario_path);
                width = scenario.game.map_width;
                height = scenario.game.map_height;
            }
            RegionSet regions(width, height);
            for (const auto& p : load_points(points_path)) regions.record_action_point(p);
            write_output(out_path, regions.dump_json());
        } else if (*srv) {
            SessionServer::Options opts;
            opts.bind_address = bind;
            opts.port = static_cast<unsigned short>(port);
            opts.scenario = scenario_or_default(scenario_path);
            opts.data_dir = data_dir;
            SessionServer server(std::move(opts));
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            server.start();
            std::cerr << "listening on " << bind << ":" << server.port() << '\n';
            server.wait();
        }
    } catch (const ConfigError& ex) {
        std::cerr << "configuration error: " << ex.what() << '\n';
        return kExitConfig;
    } catch (const ParseError& ex) {
        std::cerr << "parse error: " << ex.what() << '\n';
        return kExitParse;
    } catch (const DomainError& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
    return 0;
}
