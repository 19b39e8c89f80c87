#pragma once

#include <stdexcept>
#include <string>

namespace freebnd {

enum class ErrorKind {
    invalid_input,
    under_resolved,
    degenerate,
    not_converged,
    unsupported_dimension,
    internal,
};

const char* to_string(ErrorKind k);

// Rejections raised by the numerical operations. Flags that are not errors
// (e.g. "hypothesis violated") travel inside the report structs instead.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace freebnd
