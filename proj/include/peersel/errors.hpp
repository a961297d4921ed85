#pragma once

#include <stdexcept>
#include <string>

namespace peersel {

// Error categories map to distinct process exit codes so scripted callers
// can tell a bad config from bad data from a numerical failure.
enum class ErrorCategory {
    config,     // malformed or inconsistent configuration
    data,       // input data violates a contract (misaligned grids, empty panel, ...)
    parameter,  // out-of-range argument to an operation
    numeric,    // iteration failed to converge, degenerate variance, ...
    io,         // filesystem / serialization failure
};

inline const char* to_string(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::config: return "config";
        case ErrorCategory::data: return "data";
        case ErrorCategory::parameter: return "parameter";
        case ErrorCategory::numeric: return "numeric";
        case ErrorCategory::io: return "io";
    }
    return "unknown";
}

inline int exit_code(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::config: return 2;
        case ErrorCategory::data: return 3;
        case ErrorCategory::parameter: return 4;
        case ErrorCategory::numeric: return 5;
        case ErrorCategory::io: return 6;
    }
    return 1;
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

[[noreturn]] inline void throw_config(const std::string& msg) { throw Error(ErrorCategory::config, msg); }
[[noreturn]] inline void throw_data(const std::string& msg) { throw Error(ErrorCategory::data, msg); }
[[noreturn]] inline void throw_parameter(const std::string& msg) { throw Error(ErrorCategory::parameter, msg); }
[[noreturn]] inline void throw_numeric(const std::string& msg) { throw Error(ErrorCategory::numeric, msg); }
[[noreturn]] inline void throw_io(const std::string& msg) { throw Error(ErrorCategory::io, msg); }

}  // namespace peersel
