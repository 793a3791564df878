#pragma once

#include <stdexcept>
#include <string>

namespace tntopo {

/// Caller passed something structurally wrong (bad labels, mismatched
/// extents, bonds that are not adjacent, ...).
class ArgumentError : public std::invalid_argument {
public:
    explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

/// The request is well-formed but outside what the implementation supports
/// (oracle cap exceeded, inner product on an unsupported topology, ...).
class UnsupportedError : public std::runtime_error {
public:
    explicit UnsupportedError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed serialized input. The message carries location context.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace tntopo
