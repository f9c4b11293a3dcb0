#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace projop {

/// Failure categories shared by every module. The CLI maps them to exit codes.
enum class ErrorKind {
    usage,       // caller broke a precondition (size mismatch, index out of range)
    config,      // experiment configuration rejected
    domain,      // non-finite values where finite ones are required
    resource,    // a documented size cap was exceeded
    coverage,    // point outside the Leray-Schauder net
    degeneracy,  // quasi-inner product lost definiteness
    divergence,  // iteration or training blew up
    singular,    // singular linear system or resonant equation
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::usage: return "usage";
    case ErrorKind::config: return "config";
    case ErrorKind::domain: return "domain";
    case ErrorKind::resource: return "resource";
    case ErrorKind::coverage: return "coverage";
    case ErrorKind::degeneracy: return "degeneracy";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::singular: return "singular";
    }
    return "unknown";
}

/// Process exit status for an error kind: 2 config, 3 numerical failure, 4 resource cap.
inline int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::usage:
    case ErrorKind::config: return 2;
    case ErrorKind::resource: return 4;
    default: return 3;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) fail(kind, message);
}

} // namespace projop
