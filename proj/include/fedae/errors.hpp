#pragma once

#include <stdexcept>
#include <string>

namespace fedae {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Incompatible tensor/layer dimensions.
struct DimensionError : Error {
    using Error::Error;
};

/// Flatten/unflatten/normalize length mismatches and malformed wire payloads.
struct CodecError : Error {
    using Error::Error;
};

/// Non-finite values produced where finite math is required.
struct NumericError : Error {
    using Error::Error;
};

/// Invalid configuration or arguments.
struct ConfigError : Error {
    using Error::Error;
};

/// Federation protocol violations (missing/duplicate/stale updates, decoders).
struct ProtocolError : Error {
    using Error::Error;
};

/// File system and stream failures.
struct IoError : Error {
    using Error::Error;
};

/// Malformed file contents; message carries the byte offset.
struct ParseError : Error {
    using Error::Error;
};

} // namespace fedae
