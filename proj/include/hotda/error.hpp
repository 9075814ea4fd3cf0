#pragma once

#include <stdexcept>
#include <string>

namespace hotda {

/// Input rejected by a precondition check (bad shapes, off-simplex weights, empty classes...).
class InvalidInput : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A solver failed to reach its target; the message carries iteration diagnostics.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// File could not be read, written or parsed.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {
[[noreturn]] inline void reject(const std::string& what) { throw InvalidInput(what); }
inline void require(bool cond, const std::string& what) {
    if (!cond) reject(what);
}
} // namespace detail

} // namespace hotda
