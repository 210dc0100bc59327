#pragma once

#include <stdexcept>
#include <string>

namespace nsm {

// Error categories map 1:1 onto CLI exit codes: 2 input, 3 numerical, 4 I/O.
enum class ErrorKind { Input = 2, Numeric = 3, Io = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

// Bad arguments, malformed files, violated preconditions, empty inputs.
struct InputError : Error {
    explicit InputError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

// Non-finite losses, diverging optimizations.
struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

}  // namespace nsm
