#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfdr {

class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Caller supplied something outside an operation's domain.
class ArgumentError : public Error {
   public:
    using Error::Error;
};

class ConfigError : public Error {
   public:
    using Error::Error;
};

// Model validation failures. Each is its own type so callers can tell them apart.
class ModelError : public Error {
   public:
    using Error::Error;
};

class StochasticityError : public ModelError {
   public:
    using ModelError::ModelError;
};

class ReducibleChainError : public ModelError {
   public:
    using ModelError::ModelError;
};

class DimensionError : public ModelError {
   public:
    using ModelError::ModelError;
};

class NumericalError : public Error {
   public:
    using Error::Error;
};

class ConvergenceError : public NumericalError {
   public:
    ConvergenceError(const std::string& what, double last_residual)
        : NumericalError(what + " (last residual " + std::to_string(last_residual) + ")"),
          residual_(last_residual) {}
    double residual() const noexcept { return residual_; }

   private:
    double residual_;
};

class PoleProximityError : public NumericalError {
   public:
    using NumericalError::NumericalError;
};

class DegenerateModelError : public NumericalError {
   public:
    using NumericalError::NumericalError;
};

class ParseError : public Error {
   public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

   private:
    std::size_t line_;
};

}  // namespace mfdr
