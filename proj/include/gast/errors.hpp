#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gast {

// Shape mismatch between numeric containers; the message names both shapes.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Invalid value for an operation's domain (empty input, out-of-range k, ...).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Bad run configuration: unknown key, missing required key, invalid value.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t line_number)
        : std::runtime_error(what + " (line " + std::to_string(line_number) + ")"),
          line(line_number) {}
    std::size_t line;
};

// Non-finite loss or gradient; training aborts with step/layer context.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace gast
