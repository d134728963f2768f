#pragma once

#include <stdexcept>
#include <string>

namespace retex {

// Error hierarchy used across the library. The CLI maps these
// to process exit codes: input errors -> 2, config errors -> 3,
// broken internal invariants -> 4.

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// File exists but is not a format we decode.
class FormatError : public IoError {
public:
    explicit FormatError(const std::string& msg) : IoError(msg) {}
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class InvariantError : public std::logic_error {
public:
    explicit InvariantError(const std::string& msg) : std::logic_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvariantError(msg);
}

} // namespace retex
