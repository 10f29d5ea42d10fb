#pragma once

#include <stdexcept>
#include <string>

namespace sphering {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or model parameter (bad covariance, wrong dimensions, ...).
class ParameterError : public Error {
public:
  using Error::Error;
};

/// Data that cannot support the requested computation (a class with fewer
/// than two columns, a constant statistic vector, ...).
class DegenerateError : public Error {
public:
  using Error::Error;
};

/// Malformed or inconsistent scenario / command-line configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// An iterative solver stopped at its iteration cap; carries the residual it
/// reached.
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

private:
  double residual_;
};

}  // namespace sphering
