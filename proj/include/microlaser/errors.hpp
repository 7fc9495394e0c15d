// Exception types raised by the microlaser library.

#pragma once

#include <stdexcept>
#include <string>

namespace microlaser {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A parameter set is outside its documented domain.
class InvalidParameter : public Error {
public:
    using Error::Error;
};

// R*tau >= 1: successive transits would overlap.
class SingleAtomRegimeViolation : public InvalidParameter {
public:
    SingleAtomRegimeViolation(double rate, double flight_time);
    double product() const noexcept { return product_; }

private:
    double product_;
};

// Errors raised while solving for the steady state; mapped to exit code 3 by the CLI.
class NumericalError : public Error {
public:
    using Error::Error;
};

class ContinuedFractionSingular : public NumericalError {
public:
    explicit ContinuedFractionSingular(int n);
    int index() const noexcept { return index_; }

private:
    int index_;
};

class TruncationNotConverged : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class IntegrationFailure : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Top Fock levels carry more population than the oracle tolerates.
class TruncationLeak : public NumericalError {
public:
    TruncationLeak(double leaked, int n_fock);
    double leaked() const noexcept { return leaked_; }

private:
    double leaked_;
};

// Config text problems; mapped to exit code 2 by the CLI.
class ConfigError : public Error {
public:
    using Error::Error;
};

class ParseError : public ConfigError {
public:
    ParseError(int line, const std::string& what);
    int line() const noexcept { return line_; }

private:
    int line_;
};

class ValidationError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Oracle request exceeds the desk-scale limits.
class CapacityError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

}  // namespace microlaser
