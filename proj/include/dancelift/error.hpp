#pragma once

#include <stdexcept>
#include <string>

namespace dancelift {

enum class ErrorKind {
    InvalidArgument,
    BoundsViolation,
    BehindCamera,
    LowVisibility,
    Divergence,
    TrackLost,
    UndefinedMetric,
    Format,
    File,
};

/// Single exception type for the library; `kind()` drives CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// 2 for input/validation problems, 3 for numerical failures.
    int exit_code() const noexcept {
        switch (kind_) {
        case ErrorKind::Divergence:
        case ErrorKind::UndefinedMetric:
        case ErrorKind::BehindCamera:
        case ErrorKind::TrackLost:
            return 3;
        default:
            return 2;
        }
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(ErrorKind::InvalidArgument, what);
}

} // namespace dancelift
