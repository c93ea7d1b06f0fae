#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace iwocf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& message) : std::runtime_error(message) {}
};

/// Malformed input text. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line)
        : Error(line == 0 ? message : "line " + std::to_string(line) + ": " + message),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Data that parsed but violates a declared constraint (rating scale, empty input).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message, std::size_t line = 0)
        : Error(line == 0 ? message : "line " + std::to_string(line) + ": " + message),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A user or item id that does not exist in the matrix being queried.
class UnknownIdError : public Error {
public:
    explicit UnknownIdError(const std::string& message) : Error(message) {}
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& message) : Error(message) {}
};

}  // namespace iwocf
