#pragma once

#include <stdexcept>
#include <string>

namespace eah {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad numeric argument (negative time, inverted interval, ...).
struct ArgumentError : Error {
    using Error::Error;
};

// A value outside the mathematical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

// Invalid model / fit / simulation configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Malformed input file; message carries file and line.
struct ParseError : Error {
    using Error::Error;
};

// A documented call-contract violation (e.g. history event at or after t).
struct PreconditionError : Error {
    using Error::Error;
};

// Continuous E-step hit an event that cannot be attributed to anything.
struct OrphanEventError : Error {
    OrphanEventError(std::size_t index, const std::string& what)
        : Error(what), event_index(index) {}
    std::size_t event_index;
};

struct EmptyDataError : Error {
    using Error::Error;
};

// Simulation exceeded the hard event cap.
struct ExplosionError : Error {
    using Error::Error;
};

// Numerical failure in a theory routine (instability, non-convergence).
struct TheoryError : Error {
    using Error::Error;
};

struct CalibrationError : Error {
    using Error::Error;
};

}  // namespace eah
