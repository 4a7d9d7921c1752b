#include "comrade/session.hpp"

#include "comrade/errors.hpp"
#include "comrade/harness.hpp"
#include "comrade/log.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <thread>

namespace comrade {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

json envelope(const char* type, const std::string& session_id) {
    return {{"type", type}, {"protocol_version", kProtocolVersion}, {"session_id", session_id}};
}

json error_message(const std::string& session_id, const std::string& code, const std::string& msg) {
    auto j = envelope("error", session_id);
    j["code"] = code;
    j["msg"] = msg;
    return j;
}

json rect_json(const Rect& r) { return {{"x0", r.x0}, {"y0", r.y0}, {"x1", r.x1}, {"y1", r.y1}}; }

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string new_session_id() {
    std::random_device rd;
    const std::uint64_t v = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    return hex64(v);
}

json trace_json(const Trace& trace) {
    json arr = json::array();
    for (const auto& e : trace.entries()) {
        arr.push_back({{"tick", e.tick}, {"kind", std::string(to_string(e.kind))},
                       {"x", e.point.x}, {"y", e.point.y}, {"sv", e.sv}});
    }
    return arr;
}

Trace trace_from_json(const json& arr) {
    Trace t;
    for (const auto& e : arr) {
        const auto kind = parse_action_kind(e.at("kind").get<std::string>());
        if (!kind) throw ParseError("unknown action kind in saved trace", 0);
        t.record(e.at("sv").get<StateVector>(), *kind, {e.at("x").get<int>(), e.at("y").get<int>()},
                 e.at("tick").get<std::int64_t>());
    }
    return t;
}

// Outbound channel to the connection; a no-op once the peer is gone.
using Sink = std::function<void(json, bool close_after)>;

struct PlannedAction {
    std::optional<std::int64_t> tick;
    ActionKind kind;
    CellPoint cell;
};

}  // namespace

// ---------------------------------------------------------------------------
// Session: owns one game and its learning loop.

class Session : public std::enable_shared_from_this<Session> {
public:
    struct Settings {
        std::uint64_t seed = 1;
        int speed = 1;
        CompanionMode mode = CompanionMode::Complementary;
        bool paused = false;
        std::int64_t max_ticks = 0;  // 0: unlimited
    };

    Session(std::string id, Scenario scenario, Settings settings, std::filesystem::path data_dir)
        : id_(std::move(id)),
          scenario_(std::move(scenario)),
          settings_(settings),
          data_dir_(std::move(data_dir)),
          config_(std::make_shared<const GameConfig>(scenario_.game)),
          state_(new_game(config_, settings_.seed)),
          regions_(config_->map_width, config_->map_height),
          agent_(scenario_.companion, settings_.seed ^ 0xC0FFEEull) {
        set_speed(state_, settings_.speed);
    }

    // Rebuilds a saved session.
    static std::shared_ptr<Session> load(const std::string& id, const std::filesystem::path& data_dir) {
        std::ifstream in(data_dir / (id + ".json"));
        if (!in) return nullptr;
        const auto j = json::parse(in);
        Settings st;
        st.seed = j.at("seed").get<std::uint64_t>();
        st.speed = j.at("speed").get<int>();
        st.mode = parse_mode(j.at("mode").get<std::string>()).value_or(CompanionMode::Complementary);
        st.paused = j.at("paused").get<bool>();
        st.max_ticks = j.at("max_ticks").get<std::int64_t>();
        auto s = std::make_shared<Session>(id, scenario_from_json(j.at("scenario")), st, data_dir);
        s->state_ = state_from_json(j.at("state"), s->config_);
        s->trace_ = trace_from_json(j.at("trace"));
        for (const auto& e : s->trace_.entries()) s->regions_.record_action_point(e.point);
        s->agent_.set_rng(Rng(j.at("companion_rng").get<std::uint64_t>()));
        s->player_actions_ = j.at("player_actions").get<std::array<int, kKindCount>>();
        s->companion_actions_ = j.at("companion_actions").get<std::array<int, kKindCount>>();
        s->branch_counts_ = j.at("branch_counts").get<std::array<int, kBranchCount>>();
        return s;
    }

    const std::string& id() const { return id_; }

    void attach(Sink sink) {
        std::lock_guard lock(mu_);
        sink_ = std::move(sink);
    }

    void start() {
        owner_ = std::thread([self = shared_from_this()] { self->run(); });
    }

    void post(json msg) {
        {
            std::lock_guard lock(mu_);
            inbox_.push_back(std::move(msg));
        }
        cv_.notify_one();
    }

    void disconnect() {
        {
            std::lock_guard lock(mu_);
            disconnected_ = true;
            sink_ = nullptr;
        }
        cv_.notify_one();
    }

    void join() {
        if (owner_.joinable()) owner_.join();
    }

    json welcome() const {
        auto j = envelope("welcome", id_);
        j["config"] = to_json(scenario_);
        j["map"] = {{"width", config_->map_width},
                    {"height", config_->map_height},
                    {"lanes", config_->lanes}};
        j["tick"] = state_.tick;
        j["state_hash"] = hex64(state_hash(state_));
        j["paused"] = settings_.paused;
        j["speed"] = settings_.speed;
        j["companion"] = std::string(to_string(settings_.mode));
        j["regions"] = json::parse(regions_.dump_json());
        return j;
    }

    std::function<void(const std::string&)> on_finished;

private:
    void send(json msg, bool close_after = false) {
        Sink sink;
        {
            std::lock_guard lock(mu_);
            sink = sink_;
        }
        if (sink) sink(std::move(msg), close_after);
    }

    void send_error(const std::string& code, const std::string& msg) {
        send(error_message(id_, code, msg));
    }

    json state_delta() const {
        auto j = envelope("state_delta", id_);
        j["tick"] = state_.tick;
        j["resources"] = state_.resources;
        j["base_health"] = state_.base_health;
        j["leaks"] = state_.leaks;
        j["kills"] = state_.kills;
        j["paused"] = settings_.paused;
        json structures = json::array();
        for (const auto& s : state_.structures) {
            structures.push_back({{"kind", s.kind == StructureKind::Tower ? "tower" : "wall"},
                                  {"x", s.cell.x}, {"y", s.cell.y},
                                  {"health", s.health}, {"level", s.level}});
        }
        json enemies = json::array();
        for (const auto& e : state_.enemies) {
            enemies.push_back({{"id", e.id}, {"type", e.type}, {"row", e.row},
                               {"pos", e.pos}, {"health", e.health}});
        }
        j["entities"] = {{"structures", structures}, {"enemies", enemies}};
        json actions = json::array();
        for (const auto& a : state_.in_progress) {
            actions.push_back({{"actor", std::string(to_string(a.actor))},
                               {"kind", std::string(to_string(a.kind))},
                               {"x", a.cell.x}, {"y", a.cell.y},
                               {"ticks_remaining", a.ticks_remaining},
                               {"helped", a.helper.has_value()}});
        }
        j["in_progress"] = actions;
        j["state_hash"] = hex64(state_hash(state_));
        return j;
    }

    json report() const {
        auto counts = [](const std::array<int, kKindCount>& c) {
            json j = json::object();
            for (auto k : kActiveKinds) j[std::string(to_string(k))] = c[kind_index(k)];
            return j;
        };
        json branches = json::object();
        for (std::size_t i = 0; i < kBranchCount; ++i) {
            branches[std::string(to_string(static_cast<Branch>(i)))] = branch_counts_[i];
        }
        return {{"survival_ticks", state_.tick},
                {"game_over", state_.over},
                {"final_score", score(state_, config_->score_weights)},
                {"leaks", state_.leaks},
                {"kills", state_.kills},
                {"player_actions", counts(player_actions_)},
                {"companion_actions", counts(companion_actions_)},
                {"branch_counts", branches},
                {"trace_length", trace_.size()},
                {"state_hash", hex64(state_hash(state_))}};
    }

    void persist() {
        std::error_code ec;
        std::filesystem::create_directories(data_dir_, ec);
        json j{{"version", 1},
               {"session_id", id_},
               {"seed", settings_.seed},
               {"speed", settings_.speed},
               {"mode", std::string(to_string(settings_.mode))},
               {"paused", settings_.paused},
               {"max_ticks", settings_.max_ticks},
               {"scenario", to_json(scenario_)},
               {"state", to_json(state_)},
               {"trace", trace_json(trace_)},
               {"companion_rng", agent_.rng().state()},
               {"player_actions", player_actions_},
               {"companion_actions", companion_actions_},
               {"branch_counts", branch_counts_}};
        const auto path = data_dir_ / (id_ + ".json");
        const auto tmp = data_dir_ / (id_ + ".json.tmp");
        {
            std::ofstream out(tmp);
            out << j.dump();
        }
        std::filesystem::rename(tmp, path, ec);
        if (ec) log::error("session {}: cannot save snapshot: {}", id_, ec.message());
        log::info("session {} saved at tick {}", id_, state_.tick);
    }

    void handle(const json& msg) {
        const auto type = msg.value("type", std::string());
        if (type == "pause") {
            settings_.paused = true;
            send(state_delta());
        } else if (type == "resume") {
            settings_.paused = false;
            next_tick_ = std::chrono::steady_clock::now();
        } else if (type == "set_config") {
            try {
                if (msg.contains("speed")) {
                    set_speed(state_, msg.at("speed").get<int>());
                    settings_.speed = state_.speed;
                }
                if (msg.contains("companion")) {
                    auto cfg = to_json(scenario_.companion);
                    cfg.update(msg.at("companion"));
                    scenario_.companion = companion_config_from_json(cfg);
                    scenario_.companion.validate(config_.get());
                    const auto rng = agent_.rng();
                    agent_ = CompanionAgent(scenario_.companion, 0);
                    agent_.set_rng(rng);
                }
                if (msg.contains("mode")) {
                    const auto m = parse_mode(msg.at("mode").get<std::string>());
                    if (!m) throw ConfigError("unknown companion mode");
                    settings_.mode = *m;
                }
            } catch (const std::exception& ex) {
                send_error("config", ex.what());
            }
        } else if (type == "regions") {
            auto j = envelope("regions", id_);
            j["tick"] = state_.tick;
            j["regions"] = json::parse(regions_.dump_json());
            send(std::move(j));
        } else if (type == "player_action") {
            const auto kind = parse_action_kind(msg.value("kind", std::string()));
            if (!kind || *kind == ActionKind::Idle || !msg.contains("x") || !msg.contains("y")) {
                send_error("malformed", "player_action needs kind, x and y");
                return;
            }
            PlannedAction a{std::nullopt, *kind, {msg.at("x").get<int>(), msg.at("y").get<int>()}};
            if (msg.contains("tick") && !msg.at("tick").is_null()) {
                a.tick = msg.at("tick").get<std::int64_t>();
                if (*a.tick < state_.tick) {
                    send_error("late", "tick " + std::to_string(*a.tick) + " already passed");
                    return;
                }
            }
            planned_.push_back(a);
        } else {
            send_error("malformed", "unexpected message type '" + type + "'");
        }
    }

    void apply_player_actions() {
        // Actions scheduled for this tick, then unscheduled ones, in arrival order.
        std::vector<PlannedAction> due;
        std::erase_if(planned_, [&](const PlannedAction& a) {
            if (a.tick && *a.tick != state_.tick) return false;
            due.push_back(a);
            return true;
        });
        std::stable_partition(due.begin(), due.end(), [](const PlannedAction& a) { return a.tick.has_value(); });
        for (const auto& a : due) {
            if (state_.busy(Actor::Player)) {
                send_error("busy", "the player is already performing an action");
                continue;
            }
            if (!is_possible_at(state_, a.kind, a.cell)) {
                send_error("impossible", std::string(to_string(a.kind)) + " is not possible at (" +
                                             std::to_string(a.cell.x) + ", " +
                                             std::to_string(a.cell.y) + ")");
                continue;
            }
            trace_.record(full_feature_vector(state_), a.kind, a.cell, state_.tick);
            regions_.record_action_point(a.cell);
            apply_action_at(state_, Actor::Player, a.kind, a.cell);
            ++player_actions_[kind_index(a.kind)];
        }
    }

    void companion_turn() {
        if (settings_.mode == CompanionMode::None) return;
        bool redecide = false;
        if (pending_.valid() &&
            pending_.wait_for(std::chrono::seconds(0)) == std::future_status::ready) {
            auto [agent, outcome] = pending_.get();
            agent_ = std::move(agent);
            ++branch_counts_[static_cast<std::size_t>(outcome.branch)];
            // A stale outcome that no longer applies is dropped and decided again.
            redecide = !still_valid(state_, regions_, outcome, scenario_.companion);
            if (!redecide) {
                try {
                    if (auto k = execute(state_, regions_, outcome)) {
                        ++companion_actions_[kind_index(*k)];
                        auto j = envelope("companion_action", id_);
                        j["tick"] = state_.tick;
                        j["kind"] = std::string(to_string(*k));
                        j["branch"] = std::string(to_string(outcome.branch));
                        j["region"] = outcome.chosen.pair.region;
                        j["region_rect"] = rect_json(regions_.bounds(outcome.chosen.pair.region));
                        send(std::move(j));
                    }
                } catch (const RejectedAction& ex) {
                    log::debug("session {}: companion action dropped: {}", id_, ex.what());
                    redecide = true;
                }
            }
            if (!redecide) return;
        }
        if (pending_.valid()) return;  // at most one outstanding decision
        if (state_.busy(Actor::Companion)) return;
        if (!redecide && state_.tick % scenario_.companion.decision_epoch_ticks != 0) return;
        // The decision runs on copies; the live loop keeps ticking meanwhile.
        pending_ = std::async(std::launch::async,
                              [agent = agent_, state = state_, trace = trace_, regions = regions_]() mutable {
                                  auto outcome = agent.think(state, trace, regions);
                                  return std::make_pair(std::move(agent), std::move(outcome));
                              });
    }

    void run() {
        using clock = std::chrono::steady_clock;
        next_tick_ = clock::now();
        for (;;) {
            std::deque<json> inbox;
            bool disconnected = false;
            {
                std::unique_lock lock(mu_);
                const auto wake = settings_.paused ? clock::now() + std::chrono::milliseconds(100) : next_tick_;
                cv_.wait_until(lock, wake, [&] { return !inbox_.empty() || disconnected_; });
                inbox.swap(inbox_);
                disconnected = disconnected_;
            }
            for (const auto& m : inbox) handle(m);
            if (disconnected) {
                if (pending_.valid()) pending_.wait();
                persist();
                break;
            }
            if (settings_.paused || clock::now() < next_tick_) continue;

            apply_player_actions();
            companion_turn();
            step(state_, 1);
            send(state_delta());

            if (state_.over || (settings_.max_ticks > 0 && state_.tick >= settings_.max_ticks)) {
                if (pending_.valid()) pending_.wait();
                auto j = envelope("game_over", id_);
                j["report"] = report();
                send(std::move(j), true);
                std::error_code ec;
                std::filesystem::remove(data_dir_ / (id_ + ".json"), ec);
                break;
            }
            const auto period = std::chrono::nanoseconds(
                1'000'000'000LL / (static_cast<long long>(config_->tick_rate) * settings_.speed));
            next_tick_ += period;
            // Fell far behind (e.g. after a pause): resynchronise instead of bursting.
            if (clock::now() - next_tick_ > period * 10) next_tick_ = clock::now();
        }
        if (on_finished) on_finished(id_);
    }

    std::string id_;
    Scenario scenario_;
    Settings settings_;
    std::filesystem::path data_dir_;
    std::shared_ptr<const GameConfig> config_;
    GameState state_;
    Trace trace_;
    RegionSet regions_;
    CompanionAgent agent_;
    std::future<std::pair<CompanionAgent, DecisionOutcome>> pending_;
    std::vector<PlannedAction> planned_;
    std::array<int, kKindCount> player_actions_{};
    std::array<int, kKindCount> companion_actions_{};
    std::array<int, kBranchCount> branch_counts_{};
    std::chrono::steady_clock::time_point next_tick_;

    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<json> inbox_;
    bool disconnected_ = false;
    Sink sink_;
    std::thread owner_;
};

// ---------------------------------------------------------------------------
// Server and connections

struct SessionServer::Impl {
    Options options;
    net::io_context ioc;
    tcp::acceptor acceptor{ioc};
    std::thread io_thread;
    std::mutex mu;
    std::map<std::string, std::shared_ptr<Session>> live;
    std::vector<std::shared_ptr<Session>> all;
    bool stopped = false;

    explicit Impl(Options o) : options(std::move(o)) {}

    // Registers a new or resumed session; throws with an error code on failure.
    std::shared_ptr<Session> open(const json& hello);
    void do_accept();
};

namespace {

struct HelloError : std::runtime_error {
    HelloError(std::string c, const std::string& m) : std::runtime_error(m), code(std::move(c)) {}
    std::string code;
};

}  // namespace

class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, SessionServer::Impl& server)
        : ws_(std::move(socket)), server_(server) {}

    void run() {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
            if (ec) return;
            self->do_read();
        });
    }

    // Thread-safe: hands the message to the I/O thread.
    void send(std::string text, bool close_after) {
        net::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text), close_after]() mutable {
            if (self->closed_) return;
            self->queue_.push_back(std::move(text));
            if (close_after) self->close_after_flush_ = true;
            if (self->queue_.size() == 1) self->do_write();
        });
    }

private:
    void do_read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->on_closed();
                return;
            }
            const auto text = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            self->on_message(text);
            if (!self->closed_) self->do_read();
        });
    }

    void do_write() {
        ws_.text(true);
        ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->on_closed();
                return;
            }
            self->queue_.pop_front();
            if (!self->queue_.empty()) {
                self->do_write();
            } else if (self->close_after_flush_) {
                self->close();
            }
        });
    }

    void close() {
        if (closing_) return;
        closing_ = true;
        ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {
            self->on_closed();
        });
    }

    void reply_now(const json& j, bool close_after = false) {
        queue_.push_back(j.dump());
        if (close_after) close_after_flush_ = true;
        if (queue_.size() == 1) do_write();
    }

    void on_message(const std::string& text) {
        json msg;
        try {
            msg = json::parse(text);
        } catch (const json::parse_error&) {
            reply_now(error_message(session_id(), "malformed", "message is not valid JSON"));
            return;
        }
        if (!msg.is_object() || !msg.contains("type")) {
            reply_now(error_message(session_id(), "malformed", "message needs a type"));
            return;
        }
        if (msg.value("protocol_version", -1) != kProtocolVersion) {
            reply_now(error_message(session_id(), "version",
                                    "protocol_version " + std::to_string(kProtocolVersion) + " required"),
                      true);
            return;
        }
        if (!session_) {
            if (msg.at("type") != "hello") {
                reply_now(error_message("", "malformed", "expected hello"));
                return;
            }
            try {
                session_ = server_.open(msg);
            } catch (const HelloError& ex) {
                reply_now(error_message(msg.value("session_id", std::string()), ex.code, ex.what()));
                return;
            }
            std::weak_ptr<Connection> weak = shared_from_this();
            reply_now(session_->welcome());
            session_->attach([weak](json j, bool close_after) {
                if (auto c = weak.lock()) c->send(j.dump(), close_after);
            });
            session_->start();
            return;
        }
        if (msg.at("type") == "hello") {
            reply_now(error_message(session_id(), "malformed", "session already established"));
            return;
        }
        session_->post(std::move(msg));
    }

    void on_closed() {
        if (closed_) return;
        closed_ = true;
        if (session_) {
            session_->disconnect();
            session_.reset();
        }
        beast::error_code ec;
        beast::get_lowest_layer(ws_).socket().close(ec);
    }

    std::string session_id() const { return session_ ? session_->id() : std::string(); }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    std::deque<std::string> queue_;
    SessionServer::Impl& server_;
    std::shared_ptr<Session> session_;
    bool close_after_flush_ = false;
    bool closing_ = false;
    bool closed_ = false;
};

std::shared_ptr<Session> SessionServer::Impl::open(const json& hello) {
    std::shared_ptr<Session> s;
    const auto resume_id = hello.value("session_id", std::string());
    std::lock_guard lock(mu);
    if (stopped) throw HelloError("unavailable", "server is stopping");
    if (!resume_id.empty()) {
        if (live.count(resume_id)) throw HelloError("session_in_use", "session " + resume_id + " is already active");
        try {
            s = Session::load(resume_id, options.data_dir);
        } catch (const std::exception& ex) {
            throw HelloError("unknown_session", std::string("cannot restore session: ") + ex.what());
        }
        if (!s) throw HelloError("unknown_session", "no saved session " + resume_id);
    } else {
        Session::Settings st;
        try {
            st.seed = hello.value("seed", std::uint64_t{1});
            st.speed = hello.value("speed", 1);
            st.paused = hello.value("paused", false);
            st.max_ticks = hello.value("max_ticks", std::int64_t{0});
            const auto mode = parse_mode(hello.value("companion", std::string("complementary")));
            if (!mode) throw ConfigError("unknown companion mode");
            st.mode = *mode;
            if (st.speed < 1 || st.speed > options.scenario.game.max_speed) {
                throw ConfigError("speed out of range");
            }
        } catch (const std::exception& ex) {
            throw HelloError("config", ex.what());
        }
        std::string id;
        do {
            id = new_session_id();
        } while (live.count(id));
        s = std::make_shared<Session>(id, options.scenario, st, options.data_dir);
    }
    s->on_finished = [this](const std::string& id) {
        std::lock_guard l(mu);
        live.erase(id);
    };
    live[s->id()] = s;
    all.push_back(s);
    return s;
}

void SessionServer::Impl::do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (ec) {
            if (ec != net::error::operation_aborted) log::warn("accept failed: {}", ec.message());
            if (!acceptor.is_open()) return;
        } else {
            std::make_shared<Connection>(std::move(socket), *this)->run();
        }
        do_accept();
    });
}

SessionServer::SessionServer(Options options) : impl_(std::make_unique<Impl>(std::move(options))) {
    impl_->options.scenario.validate();
}

SessionServer::~SessionServer() {
    stop();
    wait();
}

void SessionServer::start() {
    auto& im = *impl_;
    const tcp::endpoint ep(net::ip::make_address(im.options.bind_address), im.options.port);
    im.acceptor.open(ep.protocol());
    im.acceptor.set_option(net::socket_base::reuse_address(true));
    im.acceptor.bind(ep);
    im.acceptor.listen(net::socket_base::max_listen_connections);
    im.do_accept();
    im.io_thread = std::thread([&im] { im.ioc.run(); });
}

unsigned short SessionServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void SessionServer::stop() {
    auto& im = *impl_;
    std::vector<std::shared_ptr<Session>> sessions;
    {
        std::lock_guard lock(im.mu);
        if (im.stopped) return;
        im.stopped = true;
        sessions = im.all;
    }
    for (auto& s : sessions) s->disconnect();
    for (auto& s : sessions) s->join();
    net::post(im.ioc, [&im] {
        beast::error_code ec;
        im.acceptor.close(ec);
        im.ioc.stop();
    });
}

void SessionServer::wait() {
    if (impl_->io_thread.joinable()) impl_->io_thread.join();
}

}  // namespace comrade
