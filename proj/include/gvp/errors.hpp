// Error hierarchy shared by the library and the CLI. Each error carries a
// stable machine-readable code next to the human-readable message; the CLI
// maps the three subclasses onto its exit codes.
#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace gvp {

class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// Bad input: scenario schema, condenser invariants, shape invariants. Exit 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A solver hit its iteration cap without certifying optimality. Exit 3.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

// Filesystem and serialization failures. Exit 4.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace gvp
