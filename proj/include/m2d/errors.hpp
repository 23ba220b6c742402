#pragma once

#include <stdexcept>
#include <string>

namespace m2d {

// Error categories map onto the CLI exit codes: config -> 2, data -> 3,
// training -> 4. Everything a library caller can mishandle is thrown as
// an Error so the CLI can translate uniformly.
enum class ErrorKind {
    InvalidInput,   // bad values fed to an operation
    Config,         // invalid configuration or unknown key
    Data,           // file I/O, parse failures, missing inputs
    Coverage,       // query outside the supported time range
    Estimation,     // not enough data to estimate a quantity
    NotSupported,   // enumeration variant that is deliberately unimplemented
    Shape,          // tensor/window shape mismatch
    Numerical,      // non-finite values where finite ones are required
    Training,       // divergence or invalid training state
    EmptyResult,    // an operation removed or produced no elements
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    int exit_code() const noexcept {
        switch (kind_) {
            case ErrorKind::Config:
            case ErrorKind::NotSupported:
                return 2;
            case ErrorKind::Training:
            case ErrorKind::Numerical:
                return 4;
            default:
                return 3;
        }
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace m2d
