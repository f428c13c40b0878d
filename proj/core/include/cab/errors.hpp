#pragma once

#include <stdexcept>
#include <string>

namespace cab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes disagree (theta vs. slate, allocation vs. slate, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A parameter is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Factorization failure; the input was not positive definite.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

class DistributionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double gradient_norm, int iterations)
      : Error(what), gradient_norm_(gradient_norm), iterations_(iterations) {}

  double gradient_norm() const noexcept { return gradient_norm_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double gradient_norm_;
  int iterations_;
};

// Raised by the harness when a policy or solver fails mid-run.
class RunError : public Error {
 public:
  RunError(const std::string& what, int round) : Error(what), round_(round) {}
  int round() const noexcept { return round_; }

 private:
  int round_;
};

}  // namespace cab
