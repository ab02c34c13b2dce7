#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace dsl {

/// Compact scientific rendering for diagnostics ("1.23e-12").
inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

/// Base for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class GridMismatch : public Error {
public:
    using Error::Error;
};

/// A NaN or overflow appeared during time stepping.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// The pilot-wave amplitude is too small at the evaluation point for its
/// phase to be meaningful.
class NodeProximity : public Error {
public:
    using Error::Error;
};

/// The requested operation needs a pilot wave with a spatially uniform phase
/// gradient (plane wave or coherent state).
class UnsupportedPilot : public Error {
public:
    using Error::Error;
};

}  // namespace dsl
