#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace thermoid {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A physical or configuration value is out of its admissible range.
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Vector lengths disagree with the number of neighbours of the zone.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Missing or malformed configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A lagged sample was requested that the history does not hold.
class UnderflowError : public Error {
public:
    using Error::Error;
};

/// A numerical computation produced a non-finite value.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, std::size_t step)
        : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Integration blew up. Names the offending state component.
class DivergenceError : public NumericalError {
public:
    DivergenceError(const std::string& state_name, std::size_t step)
        : NumericalError("non-finite state '" + state_name + "'", step), state_(state_name) {}

    const std::string& state_name() const noexcept { return state_; }

private:
    std::string state_;
};

} // namespace thermoid
