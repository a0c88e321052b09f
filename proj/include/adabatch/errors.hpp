#pragma once

#include <stdexcept>
#include <string>

namespace adabatch {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// Gradient norm at or below the floor; the relative tests are undefined.
class DegenerateGradient : public Error {
public:
    using Error::Error;
};

class ConvergenceFailure : public Error {
public:
    using Error::Error;
};

class SingularMatrix : public Error {
public:
    using Error::Error;
};

// A tolerance is zero while the corresponding covariance contraction is not.
class ZeroTolerance : public Error {
public:
    using Error::Error;
};

// trace(Sigma) == 0: the optimal split is 0/0 and undefined.
class ZeroCovariance : public Error {
public:
    using Error::Error;
};

class InvalidSmoothness : public Error {
public:
    using Error::Error;
};

class InvalidTolerance : public Error {
public:
    using Error::Error;
};

// Objective does not provide exact oracles (plug-in mode only).
class OracleUnavailable : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace adabatch
