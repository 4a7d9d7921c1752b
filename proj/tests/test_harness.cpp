#include "comrade/errors.hpp"
#include "comrade/harness.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace comrade;

TEST_SUITE("harness") {

TEST_CASE("episodes are reproducible") {
    const auto sc = Scenario::standard();
    const auto a = run_episode(sc, PlayerPolicy::turtle(), CompanionMode::None, 7, 20000);
    const auto b = run_episode(sc, PlayerPolicy::turtle(), CompanionMode::None, 7, 20000);
    CHECK(a.dump() == b.dump());
    const auto c = run_episode(sc, PlayerPolicy::turtle(), CompanionMode::Complementary, 3, 3000);
    const auto d = run_episode(sc, PlayerPolicy::turtle(), CompanionMode::Complementary, 3, 3000);
    CHECK(c.dump() == d.dump());
}

TEST_CASE("no companion means no companion actions") {
    const auto r = run_episode(Scenario::standard(), PlayerPolicy::spreader(), CompanionMode::None, 2, 4000);
    for (int n : r.companion_actions) CHECK(n == 0);
    CHECK(r.decisions == 0);
    CHECK_FALSE(r.action_l1);
}

TEST_CASE("without experimentation the companion stays within the player's kinds") {
    auto sc = Scenario::standard();
    sc.companion.p_experiment = 0.0;
    const auto r = run_episode(sc, PlayerPolicy::turtle(), CompanionMode::Complementary, 4, 5000);
    int total = 0;
    for (auto k : kActiveKinds) {
        total += r.companion_actions[kind_index(k)];
        if (r.companion_actions[kind_index(k)] > 0) CHECK(r.player_actions[kind_index(k)] > 0);
    }
    CHECK(total > 0);
    CHECK(r.companion_unseen_actions == 0);
}

TEST_CASE("branch counts add up to decisions") {
    const auto r = run_episode(Scenario::standard(), PlayerPolicy::turtle(), CompanionMode::Complementary, 5, 4000);
    int sum = 0;
    for (int n : r.branch_counts) sum += n;
    CHECK(sum == r.decisions);
    CHECK(r.decisions > 0);
}

TEST_CASE("compare_modes aggregates per mode") {
    const auto cmp = compare_modes(Scenario::standard(), PlayerPolicy::turtle(),
                                   {CompanionMode::None, CompanionMode::Random}, 3, 3000);
    REQUIRE(cmp.rows.size() == 2);
    const auto& none = cmp.rows[0];
    CHECK(none.reports.size() == 3);
    double sum = 0;
    for (const auto& r : none.reports) sum += static_cast<double>(r.survival_ticks);
    CHECK(none.mean_survival == doctest::Approx(sum / 3));
    CHECK(cmp.to_json()["rows"].size() == 2);
    CHECK_THROWS_AS(compare_modes(Scenario::standard(), PlayerPolicy::turtle(), {CompanionMode::None}, 1, 100),
                    ConfigError);
}

TEST_CASE("mean and sample deviation") {
    const auto [m, sd] = mean_sd({2, 4, 4, 4, 5, 5, 7, 9});
    CHECK(m == doctest::Approx(5.0));
    CHECK(sd == doctest::Approx(2.138089935));
}

TEST_CASE("scripted player acts exactly at its ticks") {
    const std::vector<ScriptedAction> script{{10, ActionKind::BuildTower, {3, 2}},
                                             {200, ActionKind::BuildWall, {12, 8}},
                                             {201, ActionKind::BuildWall, {13, 8}}};  // busy, skipped
    const auto rec = run_episode_full(Scenario::standard(), PlayerPolicy::scripted(script),
                                      CompanionMode::None, 1, 400);
    REQUIRE(rec.trace.size() == 2);
    CHECK(rec.trace[0].tick == 10);
    CHECK(rec.trace[0].point == CellPoint{3, 2});
    CHECK(rec.trace[1].tick == 200);
    CHECK(rec.final_state.structure_at({3, 2}) != nullptr);
    CHECK(rec.final_state.structure_at({13, 8}) == nullptr);
}

TEST_CASE("feature-driven player follows its rule") {
    const auto rec = run_episode_full(Scenario::standard(), PlayerPolicy::feature_driven(),
                                      CompanionMode::None, 1, 6000);
    const FeatureRule rule;
    REQUIRE(rec.trace.size() > 10);
    for (const auto& e : rec.trace.entries()) CHECK(rule(e.sv) == e.kind);
}

TEST_CASE("trace export and import") {
    const auto rec = run_episode_full(Scenario::standard(), PlayerPolicy::turtle(), CompanionMode::None, 1, 3000);
    const auto path = std::filesystem::temp_directory_path() / "comrade_trace_test.jsonl";
    export_trace(rec.trace, path);
    CHECK(import_trace(path) == rec.trace);
    std::filesystem::remove(path);
}

TEST_CASE("policy and mode names") {
    for (auto name : {"turtle", "rusher", "spreader", "feature"}) {
        const auto p = parse_policy(name);
        REQUIRE(p);
        CHECK(to_string(p->type) == name);
    }
    CHECK_FALSE(parse_policy("nobody"));
    for (auto m : kAllModes) CHECK(parse_mode(to_string(m)) == m);
}

TEST_CASE("invalid scenario is rejected") {
    auto sc = Scenario::standard();
    sc.companion.p_parallel = 2.0;
    CHECK_THROWS_AS(run_episode(sc, PlayerPolicy::turtle(), CompanionMode::None, 1, 10), ConfigError);
}

}  // TEST_SUITE
