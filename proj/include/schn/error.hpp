#pragma once

#include <stdexcept>
#include <string>

namespace schn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument, configuration or shape.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Bandlimit / shape disagreement between operands.
class ShapeError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Failure reading or writing a file. Carries the offending path in the message.
class IoError : public Error {
public:
    using Error::Error;
};

enum class FormatFault {
    bad_magic,
    version_mismatch,
    truncated,
    dimension_overflow,
    bad_value,
    shape_mismatch,
};

/// A file exists and is readable but its contents violate the format.
class FormatError : public Error {
public:
    FormatError(FormatFault fault, const std::string& what) : Error(what), fault_(fault) {}
    FormatFault fault() const noexcept { return fault_; }

private:
    FormatFault fault_;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Numerical construction failed where it mathematically should not.
class InternalError : public Error {
public:
    using Error::Error;
};

} // namespace schn
