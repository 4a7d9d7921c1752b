// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "comrade/companion.hpp"
#include "comrade/harness.hpp"
#include "comrade/log.hpp"
#include "comrade/regions.hpp"
#include "comrade/session.hpp"

#include "ws_client.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace comrade;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Result {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream o;
    o.precision(prec);
    o << std::fixed << v;
    return o.str();
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

CellPoint random_point(Rng& rng, int w, int h) {
    return {static_cast<int>(rng.below(static_cast<std::uint64_t>(w))),
            static_cast<int>(rng.below(static_cast<std::uint64_t>(h)))};
}

// ---------------------------------------------------------------------------

Result partition_suite() {
    const int w = 64;
    const int h = 48;
    const auto t0 = Clock::now();
    RegionSet rs(w, h);
    Rng rng(2001);
    std::size_t non_saturated = 0;
    std::vector<int> cover(static_cast<std::size_t>(w * h));
    for (int i = 0; i < 10000; ++i) {
        const auto before = rs.size();
        rs.record_action_point(random_point(rng, w, h));
        if (rs.size() == before + 1) {
            ++non_saturated;
        } else if (rs.size() != before) {
            return {false, "insertion " + std::to_string(i) + " changed the count by more than one"};
        }
        if (rs.size() != 1 + non_saturated) return {false, "count mismatch at insertion " + std::to_string(i)};
        std::fill(cover.begin(), cover.end(), 0);
        for (const auto& r : rs.rects()) {
            if (r.x0 < 0 || r.y0 < 0 || r.x1 > w || r.y1 > h || r.x0 >= r.x1 || r.y0 >= r.y1) {
                return {false, "degenerate or out-of-map rect at insertion " + std::to_string(i)};
            }
            for (int y = r.y0; y < r.y1; ++y) {
                for (int x = r.x0; x < r.x1; ++x) ++cover[static_cast<std::size_t>(y * w + x)];
            }
        }
        for (int c : cover) {
            if (c != 1) return {false, "cell covered " + std::to_string(c) + " times at insertion " + std::to_string(i)};
        }
    }
    const double secs = seconds_since(t0);
    return {secs < 60.0, "10000 insertions, " + std::to_string(rs.size()) + " regions (" +
                             std::to_string(10000 - non_saturated) + " saturated), exact tiling after each; " +
                             fmt(secs, 2) + " s (limit 60 s)"};
}

// Mean wall time of `batch` insertions into a set that already holds `prior` points.
double mean_insert_ns(std::size_t prior, std::size_t batch, std::uint64_t seed) {
    const int side = 1024;
    RegionSet rs(side, side);
    Rng rng(seed);
    for (std::size_t i = 0; i < prior; ++i) rs.record_action_point(random_point(rng, side, side));
    std::vector<CellPoint> pts(batch);
    for (auto& p : pts) p = random_point(rng, side, side);
    const auto t0 = Clock::now();
    for (const auto& p : pts) rs.record_action_point(p);
    return std::chrono::duration<double, std::nano>(Clock::now() - t0).count() / static_cast<double>(batch);
}

Result constant_time_split() {
    // Median of several repetitions to damp scheduler noise.
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    std::vector<double> small;
    std::vector<double> large;
    for (std::uint64_t rep = 0; rep < 7; ++rep) {
        small.push_back(mean_insert_ns(100, 100, 50 + rep));
        large.push_back(mean_insert_ns(10000, 100, 50 + rep));
    }
    const double a = median(small);
    const double b = median(large);
    return {b <= 3.0 * a, "mean per insertion " + fmt(a, 0) + " ns at N=100, " + fmt(b, 0) +
                              " ns at N=10000 on a 1024x1024 map; ratio " + fmt(b / a, 3) + " (limit 3)"};
}

Result lookup_oracle() {
    const int w = 64;
    const int h = 48;
    RegionSet rs(w, h);
    Rng rng(77);
    while (rs.split_count() < 1000) rs.record_action_point(random_point(rng, w, h));
    int mismatches = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto p = random_point(rng, w, h);
        long hit = -1;
        int hits = 0;
        for (std::size_t r = 0; r < rs.rects().size(); ++r) {
            if (rs.rects()[r].contains(p)) {
                hit = static_cast<long>(r);
                ++hits;
            }
        }
        if (hits != 1 || static_cast<long>(rs.lookup(p)) != hit) ++mismatches;
    }
    return {mismatches == 0, "10000 points after 1000 splits, " + std::to_string(mismatches) + " mismatches"};
}

// A randomized mid-game position with a trained model and at most `max_pairs` seen pairs.
struct Position {
    GameState state;
    Trace trace;
    RegionSet regions{40, 24};
    std::optional<PredictorModel> model;
    std::optional<InProgressAction> player_current;
};

Position random_position(Rng& rng, std::size_t max_pairs, bool tight_economy) {
    auto cfg = GameConfig::standard();
    if (tight_economy) {
        cfg.income_per_tick = static_cast<int>(rng.below(2));
        cfg.kill_bounty = static_cast<int>(rng.below(11));
    }
    Position p{new_game(cfg, rng.next()), {}, RegionSet(40, 24), std::nullopt, std::nullopt};
    step(p.state, static_cast<std::int64_t>(rng.below(1500)));
    for (int i = 0; i < 6; ++i) {
        const auto c = random_point(rng, 20, 24);
        if (!p.state.structure_at(c)) {
            const auto kind = rng.below(2) ? StructureKind::Tower : StructureKind::Wall;
            place_structure(p.state, kind, c, 1 + static_cast<int>(rng.below(100)));
        }
    }
    p.state.resources = tight_economy ? 80 + static_cast<std::int64_t>(rng.below(200))
                                      : 200 + static_cast<std::int64_t>(rng.below(600));

    std::vector<std::pair<ActionKind, CellPoint>> pairs;
    const auto n_pairs = 1 + rng.below(max_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        pairs.emplace_back(kActiveKinds[rng.below(4)], random_point(rng, 40, 24));
    }
    for (const auto& [k, c] : pairs) p.regions.record_action_point(c);
    const int entries = 20 + static_cast<int>(rng.below(20));
    for (int i = 0; i < entries; ++i) {
        const auto& [k, c] = pairs[rng.below(pairs.size())];
        auto sv = full_feature_vector(p.state);
        sv[static_cast<std::size_t>(Feature::TicksSinceLastPlayerAction)] = static_cast<double>(rng.below(200));
        p.trace.record(std::move(sv), k, c, i);
    }
    p.model = train(p.trace, p.regions, DecisionTreeParams{}, FeatureConfig{});
    if (rng.below(2) && !p.state.busy(Actor::Player)) {
        const auto c = random_point(rng, 20, 24);
        if (is_possible_at(p.state, ActionKind::BuildWall, c)) {
            apply_action_at(p.state, Actor::Player, ActionKind::BuildWall, c);
            p.player_current = *p.state.current_action(Actor::Player);
        }
    }
    return p;
}

Result rollout_purity() {
    Rng rng(31337);
    int changed = 0;
    const CompanionConfig cfg;
    for (int i = 0; i < 1000; ++i) {
        auto p = random_position(rng, 4, i % 2 == 1);
        const auto before = state_hash(p.state);
        const auto bytes = canonical_bytes(p.state);
        Rng drng(rng.next());
        (void)decide(p.state, p.trace, p.regions, &*p.model, cfg, drng, p.player_current);
        if (state_hash(p.state) != before || canonical_bytes(p.state) != bytes) ++changed;
    }
    return {changed == 0, "1000 decide() calls on randomized positions, " + std::to_string(changed) +
                              " changed the live state hash"};
}

// Exhaustive reference for the best-state choice, written independently of the library search.
struct Enumeration {
    std::optional<ActionPair> best;
    int excluded = 0;
};

Enumeration enumerate(const GameState& s, const RegionSet& rs, const std::vector<ActionPair>& seen,
                      const ActionPair& predicted, const CompanionConfig& cfg) {
    Enumeration e;
    std::int64_t best_score = 0;
    for (const auto& pair : seen) {
        const Rect r = rs.bounds(pair.region);
        if (!is_possible(s, pair.kind, r)) continue;
        GameState clone = s;
        apply_action(clone, Actor::Companion, pair.kind, r);
        for (int t = 0; t < cfg.horizon_ticks; ++t) step(clone, 1);
        if (!is_possible(clone, predicted.kind, rs.bounds(predicted.region))) {
            ++e.excluded;
            continue;
        }
        const auto sc = clone.base_health * cfg.score_weights.health + clone.resources * cfg.score_weights.resources +
                        clone.kills * cfg.score_weights.kills - clone.leaks * cfg.score_weights.leaks;
        if (!e.best || sc > best_score) {
            e.best = pair;
            best_score = sc;
        }
    }
    return e;
}

Result best_state_oracle() {
    Rng rng(4242);
    CompanionConfig cfg;
    cfg.p_help = 0.0;
    cfg.p_parallel = 0.0;
    cfg.p_experiment = 0.0;
    int built = 0;
    int attempts = 0;
    int mismatches = 0;
    int with_exclusions = 0;
    int all_excluded = 0;
    while (built < 50 && attempts < 5000) {
        ++attempts;
        auto p = random_position(rng, 4, built % 2 == 1);
        const auto seen = seen_pairs(p.trace, p.regions);
        const auto predicted = predict_next(*p.model, full_feature_vector(p.state));
        // BestState is only reached when the prediction is currently possible.
        if (!pair_possible(p.state, p.regions, predicted) || seen.size() > 4) continue;
        ++built;
        Rng drng(rng.next());
        const auto out = decide(p.state, p.trace, p.regions, &*p.model, cfg, drng, p.player_current);
        const auto ref = enumerate(p.state, p.regions, seen, predicted, cfg);
        if (ref.excluded > 0) ++with_exclusions;
        bool ok;
        if (ref.best) {
            ok = out.branch == Branch::BestState && out.chosen == Choice::of(*ref.best);
        } else {
            ++all_excluded;
            ok = out.branch == Branch::DefaultBehavior;
        }
        if (!ok) ++mismatches;
    }
    const bool pass = built == 50 && mismatches == 0 && with_exclusions > 0;
    return {pass, std::to_string(built) + " scenarios (<= 4 seen pairs), " + std::to_string(mismatches) +
                      " mismatches; " + std::to_string(with_exclusions) + " had jeopardy exclusions, " +
                      std::to_string(all_excluded) + " excluded every pair"};
}

Result branch_calibration() {
    // Fixed position where every branch is reachable: a joinable player action,
    // a possible prediction, seen pairs for BestState, and an unseen kind
    // (BuildWall) that is possible in every region.
    auto s = new_game(GameConfig::standard(), 5);
    s.resources = 2000;
    place_structure(s, StructureKind::Tower, {5, 5}, 50);
    Trace trace;
    RegionSet rs(40, 24);
    rs.record_action_point({10, 6});
    rs.record_action_point({30, 6});
    for (int i = 0; i < 30; ++i) {
        trace.record(full_feature_vector(s), ActionKind::BuildTower, i % 3 ? CellPoint{10, 6} : CellPoint{30, 6}, i);
    }
    apply_action_at(s, Actor::Player, ActionKind::BuildTower, {3, 3});
    const auto current = *s.current_action(Actor::Player);
    CompanionConfig cfg;
    cfg.horizon_ticks = 120;
    const auto model = train(trace, rs, cfg.classifier, cfg.features);

    Rng rng(8080);
    const int n = 10000;
    std::array<int, kBranchCount> base{};
    int experiment = 0;
    int unseen_choices = 0;
    for (int i = 0; i < n; ++i) {
        const auto out = decide(s, trace, rs, &model, cfg, rng, current);
        ++base[static_cast<std::size_t>(out.base_branch)];
        if (out.branch == Branch::ExperimentOverride) ++experiment;
        if (out.chosen.type == Choice::Type::Pair && out.chosen.pair.kind != ActionKind::BuildTower) {
            ++unseen_choices;
        }
    }
    const double help = base[static_cast<std::size_t>(Branch::HelpCurrent)] / static_cast<double>(n);
    const double par = base[static_cast<std::size_t>(Branch::ParallelPredicted)] / static_cast<double>(n);
    const double exp = experiment / static_cast<double>(n);
    const double par_target = (1 - cfg.p_help) * cfg.p_parallel;
    const bool pass = std::abs(help - cfg.p_help) <= 0.02 && std::abs(par - par_target) <= 0.02 &&
                      std::abs(exp - cfg.p_experiment) <= 0.02;
    return {pass, "10000 decisions: HelpCurrent " + fmt(help) + " (target " + fmt(cfg.p_help) +
                      "), ParallelPredicted " + fmt(par) + " (target " + fmt(par_target) +
                      "), ExperimentOverride " + fmt(exp) + " (target " + fmt(cfg.p_experiment) +
                      "), tolerance 0.02; unseen-kind choices " + fmt(unseen_choices / static_cast<double>(n))};
}

Result seen_kinds_only() {
    auto sc = Scenario::standard();
    sc.companion.p_experiment = 0.0;
    int unseen = 0;
    int companion_actions = 0;
    int player_kinds_missing = 0;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        const auto r = run_episode(sc, PlayerPolicy::turtle(), CompanionMode::Complementary, seed, kDefaultMaxTicks);
        unseen += r.companion_unseen_actions;
        for (auto k : kActiveKinds) {
            companion_actions += r.companion_actions[kind_index(k)];
            if (r.player_actions[kind_index(k)] == 0) ++player_kinds_missing;
        }
    }
    // The check is only meaningful if the player leaves some kind unused.
    const bool pass = unseen == 0 && companion_actions > 0 && player_kinds_missing > 0;
    return {pass, "30 Turtle episodes with p_experiment = 0: " + std::to_string(companion_actions) +
                      " companion actions, " + std::to_string(unseen) + " of a kind the player never used"};
}

Result classifier_sanity() {
    const auto rec = run_episode_full(Scenario::standard(), PlayerPolicy::feature_driven(), CompanionMode::None, 1,
                                      kDefaultMaxTicks);
    RegionSet rs(rec.final_state.cfg().map_width, rec.final_state.cfg().map_height);
    for (const auto& e : rec.trace.entries()) rs.record_action_point(e.point);
    const auto ev = evaluate_configs(rec.trace, rs,
                                     {{MajorityParams{}, FeatureConfig{}}, {DecisionTreeParams{}, FeatureConfig{}}});
    const double dt = ev.table[1].accuracy;
    const double maj = ev.table[0].accuracy;
    const bool pass = rec.trace.size() >= 100 && dt >= 0.95 && ev.best == 1 && dt > maj;
    return {pass, std::to_string(rec.trace.size()) + " recorded actions; decision tree " + fmt(dt) +
                      " (limit 0.95), majority " + fmt(maj) + "; ranked best: " + (ev.best == 1 ? "tree" : "majority")};
}

Result efficacy_trend() {
    const auto t0 = Clock::now();
    const auto cmp = compare_modes(Scenario::standard(), PlayerPolicy::turtle(),
                                   {CompanionMode::Complementary, CompanionMode::Random, CompanionMode::None}, 30,
                                   kDefaultMaxTicks);
    const double secs = seconds_since(t0);
    const auto& c = cmp.rows[0];
    const auto& r = cmp.rows[1];
    const auto& n = cmp.rows[2];
    const bool pass = c.mean_survival > r.mean_survival && c.mean_survival > n.mean_survival && secs < 600;
    return {pass, "mean survival ticks over 30 Turtle seeds: complementary " + fmt(c.mean_survival, 1) + " (sd " +
                      fmt(c.sd_survival, 1) + "), random " + fmt(r.mean_survival, 1) + " (sd " + fmt(r.sd_survival, 1) +
                      "), none " + fmt(n.mean_survival, 1) + " (sd " + fmt(n.sd_survival, 1) + "); margins +" +
                      fmt(c.mean_survival - r.mean_survival, 1) + " vs random, +" +
                      fmt(c.mean_survival - n.mean_survival, 1) + " vs none; " + fmt(secs, 1) + " s (limit 600 s)"};
}

Result determinism() {
    int runs = 0;
    int differing = 0;
    const auto sc = Scenario::standard();
    for (auto policy : {PlayerPolicy::turtle(), PlayerPolicy::rusher(), PlayerPolicy::spreader(),
                        PlayerPolicy::feature_driven()}) {
        for (auto mode : kAllModes) {
            for (std::uint64_t seed : {3ull, 1000003ull}) {
                const auto a = run_episode(sc, policy, mode, seed, 4000);
                const auto b = run_episode(sc, policy, mode, seed, 4000);
                ++runs;
                if (a.dump() != b.dump()) ++differing;
            }
        }
    }
    return {differing == 0, std::to_string(runs) + " (policy, mode, seed) combinations run twice, " +
                                std::to_string(differing) + " reports differ"};
}

Result served_vs_headless() {
    std::vector<ScriptedAction> script;
    Rng rng(606);
    std::int64_t tick = 3;
    for (int i = 0; i < 25; ++i) {
        const auto kind = i % 4 == 3 ? ActionKind::BuildWall : ActionKind::BuildTower;
        script.push_back({tick, kind, {1 + static_cast<int>(rng.below(14)), static_cast<int>(rng.below(24))}});
        tick += 70 + static_cast<std::int64_t>(rng.below(60));
    }
    const std::int64_t max_ticks = 3000;
    const std::uint64_t seed = 17;
    const auto headless =
        run_episode(Scenario::standard(), PlayerPolicy::scripted(script), CompanionMode::None, seed, max_ticks);

    const auto dir = std::filesystem::temp_directory_path() / "comrade_acceptance_sessions";
    std::filesystem::remove_all(dir);
    SessionServer server({"127.0.0.1", 0, Scenario::standard(), dir});
    server.start();
    std::string served;
    std::int64_t served_ticks = -1;
    {
        testutil::WsClient client(server.port());
        auto msg = [](const std::string& type, json extra) {
            extra["type"] = type;
            extra["protocol_version"] = kProtocolVersion;
            return extra;
        };
        client.send(msg("hello", {{"seed", seed}, {"speed", 16}, {"companion", "none"}, {"paused", true},
                                  {"max_ticks", max_ticks}}));
        if (!client.recv_type("welcome")) return {false, "no welcome from the server"};
        for (const auto& a : script) {
            client.send(msg("player_action", {{"kind", std::string(to_string(a.kind))}, {"x", a.cell.x},
                                              {"y", a.cell.y}, {"tick", a.tick}}));
        }
        client.send(msg("resume", json::object()));
        const auto over = client.recv_type("game_over", std::chrono::seconds(120));
        if (!over) return {false, "no game_over from the server"};
        served = (*over)["report"]["state_hash"].get<std::string>();
        served_ticks = (*over)["report"]["survival_ticks"].get<std::int64_t>();
    }
    server.stop();
    server.wait();
    const auto expected = hex(headless.final_state_hash);
    return {served == expected && served_ticks == headless.survival_ticks,
            std::to_string(script.size()) + " scripted actions, seed " + std::to_string(seed) + ", " +
                std::to_string(max_ticks) + " ticks: served " + served + ", headless " + expected};
}

}  // namespace

int main(int argc, char** argv) {
    // optional arguments restrict the run to the named criteria
    const std::vector<std::string> only(argv + 1, argv + argc);
    log::init_from_env();
    const std::vector<std::pair<std::string, std::function<Result()>>> criteria = {
        {"partition", partition_suite},
        {"constant-time-split", constant_time_split},
        {"lookup-oracle", lookup_oracle},
        {"rollout-purity", rollout_purity},
        {"best-state-oracle", best_state_oracle},
        {"branch-calibration", branch_calibration},
        {"seen-kinds-only", seen_kinds_only},
        {"classifier-sanity", classifier_sanity},
        {"efficacy-trend", efficacy_trend},
        {"determinism", determinism},
        {"served-vs-headless", served_vs_headless},
    };
    int failed = 0;
    int ran = 0;
    for (const auto& [name, check] : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
        ++ran;
        Result r;
        try {
            r = check();
        } catch (const std::exception& ex) {
            r = {false, std::string("exception: ") + ex.what()};
        }
        if (!r.pass) ++failed;
        std::cout << (r.pass ? "PASS " : "FAIL ") << name << ": " << r.detail << std::endl;
    }
    std::cout << ran - failed << "/" << ran << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
