#pragma once

#include <stdexcept>
#include <string>

namespace fpd {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Incompatible shapes, sizes or dimensions between operands.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Argument outside its documented domain (negative variance, bad label, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A matrix that must be positive semi-definite has an eigenvalue below the clip.
class NotPsdError : public Error {
public:
    NotPsdError(double eigenvalue, const std::string& what)
        : Error(what), eigenvalue_(eigenvalue) {}

    double eigenvalue() const noexcept { return eigenvalue_; }

private:
    double eigenvalue_;
};

/// NaN/Inf encountered where finite values are required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Operation called in the wrong lifecycle state (missing cache, untrained level, ...).
class StateError : public Error {
public:
    using Error::Error;
};

/// Malformed input files (CSV, manifest, model artifact).
class FormatError : public Error {
public:
    using Error::Error;
};

class ChecksumError : public FormatError {
public:
    using FormatError::FormatError;
};

class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

}  // namespace fpd
