#include "comrade/harness.hpp"
#include "comrade/session.hpp"

#include "ws_client.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <thread>

using namespace comrade;
using nlohmann::json;
using testutil::WsClient;
using namespace std::chrono_literals;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("comrade_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

json msg(const std::string& type, json extra = json::object()) {
    extra["type"] = type;
    extra["protocol_version"] = kProtocolVersion;
    return extra;
}

struct Server {
    SessionServer server;
    explicit Server(const std::string& name, Scenario sc = Scenario::standard())
        : server(SessionServer::Options{"127.0.0.1", 0, std::move(sc), temp_dir(name)}) {
        server.start();
    }
    unsigned short port() const { return server.port(); }
};

// Resumes `id`, retrying while the previous connection is still being saved.
std::optional<json> resume(unsigned short port, const std::string& id, std::unique_ptr<WsClient>& client) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        client = std::make_unique<WsClient>(port);
        client->send(msg("hello", {{"session_id", id}}));
        auto reply = client->recv();
        if (reply && (*reply)["type"] == "welcome") return reply;
        if (!reply || (*reply)["code"] != "session_in_use") return reply;
        std::this_thread::sleep_for(20ms);
    }
    return std::nullopt;
}

}  // namespace

TEST_SUITE("session") {

TEST_CASE("hello gets a welcome with the map") {
    Server s("welcome");
    WsClient c(s.port());
    c.send(msg("hello", {{"seed", 3}, {"paused", true}}));
    const auto w = c.recv();
    REQUIRE(w);
    CHECK((*w)["type"] == "welcome");
    CHECK((*w)["protocol_version"] == kProtocolVersion);
    CHECK((*w)["map"]["width"] == 40);
    CHECK((*w)["map"]["height"] == 24);
    CHECK((*w)["session_id"].get<std::string>().size() == 16);
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(state_hash(new_game(GameConfig::standard(), 3))));
    CHECK((*w)["state_hash"] == std::string(hex));
    CHECK((*w)["config"].contains("game"));
}

TEST_CASE("malformed messages get an error and keep the connection") {
    Server s("malformed");
    WsClient c(s.port());
    c.send_text("{not json");
    auto e = c.recv();
    REQUIRE(e);
    CHECK((*e)["type"] == "error");
    CHECK((*e)["code"] == "malformed");
    CHECK((*e).contains("protocol_version"));
    CHECK((*e).contains("session_id"));
    c.send(msg("pause"));
    e = c.recv();
    REQUIRE(e);
    CHECK((*e)["code"] == "malformed");
    c.send(msg("hello", {{"paused", true}}));
    const auto w = c.recv();
    REQUIRE(w);
    CHECK((*w)["type"] == "welcome");
    c.send(msg("player_action", {{"kind", "Dance"}, {"x", 1}, {"y", 1}}));
    e = c.recv();
    REQUIRE(e);
    CHECK((*e)["code"] == "malformed");
    CHECK((*e)["session_id"] == (*w)["session_id"]);
}

TEST_CASE("a version mismatch is answered and closed") {
    Server s("version");
    WsClient c(s.port());
    c.send(json{{"type", "hello"}, {"protocol_version", 99}});
    const auto e = c.recv();
    REQUIRE(e);
    CHECK((*e)["code"] == "version");
    CHECK_FALSE(c.recv(2s));
    CHECK(c.closed());
}

TEST_CASE("unaffordable player action is impossible") {
    auto sc = Scenario::standard();
    sc.game.starting_resources = 0;
    sc.game.income_per_tick = 0;
    Server s("impossible", sc);
    WsClient c(s.port());
    c.send(msg("hello", {{"speed", 16}}));
    REQUIRE(c.recv_type("welcome"));
    c.send(msg("player_action", {{"kind", "BuildTower"}, {"x", 3}, {"y", 3}}));
    const auto e = c.recv_type("error");
    REQUIRE(e);
    CHECK((*e)["code"] == "impossible");
}

TEST_CASE("applied actions show up in the next delta") {
    Server s("apply");
    WsClient c(s.port());
    c.send(msg("hello", {{"speed", 16}, {"companion", "none"}}));
    REQUIRE(c.recv_type("welcome"));
    c.send(msg("player_action", {{"kind", "BuildWall"}, {"x", 5}, {"y", 5}}));
    bool seen = false;
    for (int i = 0; i < 50 && !seen; ++i) {
        const auto d = c.recv_type("state_delta");
        REQUIRE(d);
        for (const auto& a : (*d)["in_progress"]) {
            if (a["x"] == 5 && a["y"] == 5 && a["actor"] == "player") seen = true;
        }
    }
    CHECK(seen);
    c.send(msg("player_action", {{"kind", "BuildWall"}, {"x", 6}, {"y", 5}}));
    const auto e = c.recv_type("error");
    REQUIRE(e);
    CHECK((*e)["code"] == "busy");
    c.send(msg("player_action", {{"kind", "BuildWall"}, {"x", 6}, {"y", 5}, {"tick", 0}}));
    const auto late = c.recv_type("error");
    REQUIRE(late);
    CHECK((*late)["code"] == "late");
    c.send(msg("regions"));
    const auto r = c.recv_type("regions");
    REQUIRE(r);
    CHECK((*r)["regions"].size() == 2);
}

TEST_CASE("scripted client replay matches the headless run") {
    const std::vector<ScriptedAction> script{{5, ActionKind::BuildTower, {4, 2}},
                                             {90, ActionKind::BuildWall, {10, 3}},
                                             {200, ActionKind::BuildTower, {6, 9}},
                                             {320, ActionKind::BuildWall, {11, 8}},
                                             {450, ActionKind::BuildTower, {3, 14}}};
    const std::int64_t ticks = 800;
    const auto headless = run_episode(Scenario::standard(), PlayerPolicy::scripted(script),
                                      CompanionMode::None, 12, ticks);
    Server s("replay");
    WsClient c(s.port());
    c.send(msg("hello", {{"seed", 12}, {"speed", 16}, {"companion", "none"}, {"paused", true},
                         {"max_ticks", ticks}}));
    REQUIRE(c.recv_type("welcome"));
    for (const auto& a : script) {
        c.send(msg("player_action", {{"kind", std::string(to_string(a.kind))}, {"x", a.cell.x},
                                     {"y", a.cell.y}, {"tick", a.tick}}));
    }
    c.send(msg("resume"));
    const auto over = c.recv_type("game_over", 60s);
    REQUIRE(over);
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(headless.final_state_hash));
    CHECK((*over)["report"]["state_hash"] == std::string(hex));
    CHECK((*over)["report"]["survival_ticks"] == headless.survival_ticks);
    // nothing follows game_over
    CHECK_FALSE(c.recv(1s));
}

TEST_CASE("disconnect and resume restores the saved state") {
    Server s("resume");
    std::string id;
    json paused;
    {
        WsClient c(s.port());
        c.send(msg("hello", {{"seed", 4}, {"speed", 16}}));
        const auto w = c.recv_type("welcome");
        REQUIRE(w);
        id = (*w)["session_id"];
        c.send(msg("player_action", {{"kind", "BuildTower"}, {"x", 4}, {"y", 4}}));
        REQUIRE(c.recv_type("state_delta"));
        std::this_thread::sleep_for(200ms);
        c.send(msg("pause"));
        for (;;) {
            const auto d = c.recv_type("state_delta");
            REQUIRE(d);
            if ((*d)["paused"] == true) {
                paused = *d;
                break;
            }
        }
    }
    std::unique_ptr<WsClient> first;
    const auto w = resume(s.port(), id, first);
    REQUIRE(w);
    REQUIRE((*w)["type"] == "welcome");
    CHECK((*w)["state_hash"] == paused["state_hash"]);
    CHECK((*w)["tick"] == paused["tick"]);
    CHECK((*w)["paused"] == true);
    CHECK((*w)["regions"].size() == 2);

    WsClient second(s.port());
    second.send(msg("hello", {{"session_id", id}}));
    const auto e = second.recv();
    REQUIRE(e);
    CHECK((*e)["code"] == "session_in_use");

    WsClient stranger(s.port());
    stranger.send(msg("hello", {{"session_id", "0123456789abcdef"}}));
    const auto u = stranger.recv();
    REQUIRE(u);
    CHECK((*u)["code"] == "unknown_session");
}

TEST_CASE("tick cadence holds while the companion deliberates") {
    auto sc = Scenario::standard();
    sc.game.starting_resources = 3000;
    Server s("cadence", sc);
    WsClient c(s.port());
    c.send(msg("hello", {{"seed", 2}, {"speed", 16}, {"paused", true}}));
    REQUIRE(c.recv_type("welcome"));
    // Enough recorded actions to activate the companion.
    for (int i = 0; i < 24; ++i) {
        c.send(msg("player_action", {{"kind", i % 2 ? "BuildWall" : "BuildTower"},
                                     {"x", 2 + i / 2}, {"y", i % 2 ? 10 : 12}, {"tick", 100 * i}}));
    }
    // the scripted phase would take two minutes at speed 1
    c.send(msg("resume"));
    for (;;) {
        const auto d = c.recv_type("state_delta");
        REQUIRE(d);
        if ((*d)["tick"].get<int>() >= 100 * 24) break;
    }
    c.send(msg("set_config", {{"speed", 1}}));
    std::vector<double> gaps;
    auto last = std::chrono::steady_clock::now();
    int companion_msgs = 0;
    for (int n = 0; n < 160;) {
        const auto m = c.recv();
        REQUIRE(m);
        if ((*m)["type"] == "companion_action") ++companion_msgs;
        if ((*m)["type"] != "state_delta") continue;
        const auto now = std::chrono::steady_clock::now();
        if (n > 5) gaps.push_back(std::chrono::duration<double, std::milli>(now - last).count());
        last = now;
        ++n;
    }
    std::sort(gaps.begin(), gaps.end());
    const double p95 = gaps[gaps.size() * 95 / 100];
    const double nominal = 1000.0 / Scenario::standard().game.tick_rate;
    MESSAGE("p95 gap " << p95 << " ms, nominal " << nominal << " ms, companion actions " << companion_msgs);
    CHECK(p95 < 2 * nominal);
    CHECK(companion_msgs > 0);
}

}  // TEST_SUITE
