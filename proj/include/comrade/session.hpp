#pragma once

// Live play over WebSocket.
//
// Each connection owns one session: a game state advanced on a wall-clock
// cadence by a dedicated owner thread. Network I/O runs on a separate thread
// and talks to the owner through a message inbox; companion decisions run on
// worker threads against copies of the state and are applied on the tick
// after they finish. Disconnected sessions are saved under the data directory
// and can be resumed once by id. Message schemas: protocol/schema.json.

#include "comrade/serialization.hpp"

#include <filesystem>
#include <memory>
#include <string>

namespace comrade {

inline constexpr int kProtocolVersion = 1;

class SessionServer {
public:
    struct Options {
        std::string bind_address = "127.0.0.1";
        unsigned short port = 0;  // 0 picks a free port
        Scenario scenario = Scenario::standard();
        std::filesystem::path data_dir = "sessions";
    };

    explicit SessionServer(Options options);
    ~SessionServer();

    SessionServer(const SessionServer&) = delete;
    SessionServer& operator=(const SessionServer&) = delete;

    // Binds and starts serving on a background thread.
    void start();
    // The bound port; valid after start().
    unsigned short port() const;
    // Saves live sessions and stops serving.
    void stop();
    // Blocks until stop() has completed.
    void wait();

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

}  // namespace comrade
