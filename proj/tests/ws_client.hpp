#pragma once

// Minimal blocking WebSocket client for protocol tests.

#include <nlohmann/json.hpp>

#include <chrono>
#include <memory>
#include <optional>
#include <string>

namespace testutil {

class WsClient {
public:
    explicit WsClient(unsigned short port);
    ~WsClient();

    void send(const nlohmann::json& msg);
    void send_text(const std::string& text);
    // nullopt on timeout or once the server has closed the connection.
    std::optional<nlohmann::json> recv(std::chrono::milliseconds timeout = std::chrono::seconds(10));
    // Skips messages until one of the given type arrives.
    std::optional<nlohmann::json> recv_type(const std::string& type,
                                            std::chrono::milliseconds timeout = std::chrono::seconds(30));
    bool closed() const;
    void close();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace testutil
