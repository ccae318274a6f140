#pragma once

#include <stdexcept>
#include <string>

namespace site {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Schema file is malformed or inconsistent with the data table.
class SchemaError : public Error {
  public:
    using Error::Error;
};

/// Data table contains a bad cell (non-numeric, NaN, infinity) or is unusable.
class DataError : public Error {
  public:
    using Error::Error;
};

/// A function argument is out of its documented range.
class ArgumentError : public Error {
  public:
    using Error::Error;
};

/// Run configuration file is invalid.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Internal invariant violated (indicates a bug, not bad input).
class InternalError : public Error {
  public:
    using Error::Error;
};

} // namespace site
