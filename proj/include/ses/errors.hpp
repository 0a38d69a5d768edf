#pragma once

#include <stdexcept>
#include <string>

namespace ses {

// Raised for unreadable/malformed input data (CLI exit code 1).
class IngestError : public std::runtime_error {
public:
    explicit IngestError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised for invalid option combinations (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace ses
