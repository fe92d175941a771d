#pragma once

#include <stdexcept>
#include <string>

namespace smoothkit {

// Thrown on malformed files, unreadable paths, unsupported encodings.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a numeric routine cannot produce a trustworthy result
// (non-finite values, solver divergence, empty reduction domain).
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace smoothkit
