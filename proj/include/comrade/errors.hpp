#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace comrade {

// Invalid configuration values (map dimensions, probabilities, speeds, ...).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Arguments outside the domain of an operation (out-of-bounds points,
// unknown region ids, trace ordering violations).
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An action that is not possible in the current state.
class RejectedAction : public std::runtime_error {
public:
    explicit RejectedAction(std::string reason)
        : std::runtime_error("rejected action: " + reason), reason_(std::move(reason)) {}

    const std::string& reason() const noexcept { return reason_; }

private:
    std::string reason_;
};

class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file. `line` is 1-based; 0 when not line oriented.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace comrade
