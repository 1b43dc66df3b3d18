#pragma once

#include <stdexcept>
#include <string>

namespace lrmbayes {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A domain or matching-set construction that cannot produce a valid structure.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// A caller-supplied object broke one of its documented invariants.
class InvariantError : public Error {
public:
    using Error::Error;
};

/// Cholesky failure, singular system, or non-finite arithmetic.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Every term of an empirical loss was omitted or truncated away.
class DegenerateLossError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Invalid configuration or input data.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace lrmbayes
