#pragma once

#include <stdexcept>
#include <string>

namespace dkf {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct NonSpd : Error {
    using Error::Error;
};

struct SingularInnovation : Error {
    using Error::Error;
};

struct SingularCovariance : Error {
    using Error::Error;
};

struct MissingBroadcast : Error {
    using Error::Error;
};

struct StaleBroadcast : Error {
    using Error::Error;
};

struct InconsistentStep : Error {
    using Error::Error;
};

struct OrderViolation : Error {
    using Error::Error;
};

struct NoConvergence : Error {
    using Error::Error;
};

struct SingularU : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct ValidationError : Error {
    using Error::Error;
};

} // namespace dkf
