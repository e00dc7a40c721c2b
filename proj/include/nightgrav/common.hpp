#pragma once

#include <stdexcept>
#include <string>

namespace nightgrav {

/// Raised when user-supplied input (config values, file contents, call
/// contracts) violates a documented precondition. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when an input file cannot be parsed. A kind of validation error.
class ParseError : public ValidationError {
public:
    explicit ParseError(const std::string& what) : ValidationError(what) {}
};

}  // namespace nightgrav
