#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace alanet {

// Shape or axis mismatch between operands.
class DimensionError : public std::runtime_error {
public:
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

// Kernel geometry the convolution routines do not support (even sizes, zero sizes).
class KernelError : public std::runtime_error {
public:
    explicit KernelError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration value (widths, degrees, weights, file contents of a config).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file. `offset` is the byte position where parsing failed.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what + " (byte " + std::to_string(offset) + ")"), offset(offset) {}
    std::uint64_t offset;
};

// A computation produced a non-finite value.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem failure (missing file, unwritable path).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace alanet
