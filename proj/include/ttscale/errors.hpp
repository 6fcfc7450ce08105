#pragma once

#include <stdexcept>
#include <string>

namespace ttscale {

// Base for everything this library throws on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad dimensions, bad parameter ranges, malformed experiment configs.
struct ConfigError : Error {
    using Error::Error;
};

// Wrong number of inputs for an operation (empty window, K > item count, ...).
struct ArityError : Error {
    using Error::Error;
};

// Non-finite rewards, negative charges, and similar numeric misuse.
struct NumericError : Error {
    using Error::Error;
};

// Latent token stream that does not parse back into frames.
struct DecodeError : Error {
    using Error::Error;
};

// Exact enumeration asked to cover a space past its guard rails.
struct TractabilityError : Error {
    using Error::Error;
};

// Unknown or reserved-but-unavailable metric id.
struct RegistryError : Error {
    using Error::Error;
};

// File / serialization failures in the harness.
struct IoError : Error {
    using Error::Error;
};

// Invalid model pairings (e.g. zero-cost small model in compute matching).
struct ModelError : Error {
    using Error::Error;
};

}  // namespace ttscale
