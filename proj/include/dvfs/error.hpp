#pragma once

#include <stdexcept>
#include <string>

namespace dvfs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input could not be parsed (malformed CSV row, truncated JSON, ...).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Input parsed but violates a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace dvfs
