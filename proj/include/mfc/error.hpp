#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfc {

// Base for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A caller-supplied argument violates a precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// A computation cannot proceed on the given data (zero variance, rank deficiency, ...).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

// Malformed input file; carries the 1-based line number (0 when not line-specific).
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + (line ? ":" + std::to_string(line) : std::string{}) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace mfc
