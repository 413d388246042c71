#pragma once

#include <stdexcept>
#include <string>

namespace misrob {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration (CLI exit code 1).
struct ConfigError : Error {
    using Error::Error;
};

// Unusable input data, e.g. every row missing (CLI exit code 2).
struct DataError : Error {
    using Error::Error;
};
struct NoObservedData : DataError {
    NoObservedData() : DataError("no observed samples") {}
};

// Numeric failures (CLI exit code 3).
struct NumericError : Error {
    using Error::Error;
};
struct QuadratureError : NumericError {
    using NumericError::NumericError;
};
struct SingularMatrixError : NumericError {
    using NumericError::NumericError;
};
struct InfeasibleInstance : Error {
    using Error::Error;
};

}  // namespace misrob
