#pragma once

#include <stdexcept>
#include <string>

namespace burst {

enum class ErrorKind {
    Validation,  // bad arguments, broken invariants, malformed configs
    Io,          // filesystem and parse failures
    Unsupported, // file features outside the supported subset
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    // CLI convention: 1 = validation failure, 2 = I/O or unsupported input.
    int exit_code() const noexcept { return kind_ == ErrorKind::Validation ? 1 : 2; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail_validation(const std::string& msg) { throw Error(ErrorKind::Validation, msg); }
[[noreturn]] inline void fail_io(const std::string& msg) { throw Error(ErrorKind::Io, msg); }
[[noreturn]] inline void fail_unsupported(const std::string& msg) { throw Error(ErrorKind::Unsupported, msg); }

} // namespace burst
