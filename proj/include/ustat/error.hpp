#pragma once

#include <stdexcept>
#include <string>

namespace ustat {

/// Raised when an argument violates a documented precondition.
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a combinatorial or resource guard refuses to run.
class GuardExceeded : public std::runtime_error {
public:
    explicit GuardExceeded(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool ok, const std::string& message) {
    if (!ok) {
        throw InvalidInput(message);
    }
}

} // namespace detail
} // namespace ustat
