#pragma once

#include <stdexcept>
#include <string>

namespace rctaf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (non-finite input,
/// invalid beta, empty dataset, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Vector or matrix dimensions do not agree with the network layout.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid network or run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Operation requires a twice-differentiable activation.
class UnsupportedActivation : public Error {
public:
    using Error::Error;
};

/// Path enumeration refused because the network is too large.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Division by a vanishing activation derivative in the path expansion.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Malformed input file (CSV/JSON).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Bad command-line arguments.
class UsageError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class TrainingDiverged : public Error {
public:
    TrainingDiverged(int epoch, const std::string& what)
        : Error(what), epoch_(epoch) {}

    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

}  // namespace rctaf
