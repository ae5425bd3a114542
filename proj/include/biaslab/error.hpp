#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace biaslab {

/// Coarse error category. The service maps it onto an HTTP status and the
/// CLI onto an exit code.
enum class ErrorKind {
    invalid,       ///< malformed or contract-violating input
    not_found,     ///< referenced entity does not exist
    conflict,      ///< state-machine or uniqueness violation
    unauthorized,  ///< missing or wrong credentials
    undefined,     ///< statistic or metric is mathematically undefined
    io,            ///< filesystem failure
    numeric,       ///< non-finite value during computation
};

inline std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::invalid: return "invalid";
        case ErrorKind::not_found: return "not_found";
        case ErrorKind::conflict: return "conflict";
        case ErrorKind::unauthorized: return "unauthorized";
        case ErrorKind::undefined: return "undefined";
        case ErrorKind::io: return "io";
        case ErrorKind::numeric: return "numeric";
    }
    return "unknown";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string &message) : std::runtime_error(message), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &message) {
    throw Error(kind, message);
}

}  // namespace biaslab
