#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace smpp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input files, bad configuration values, violated preconditions.
class InputError : public Error {
 public:
  using Error::Error;
};

/// The observed data violate a hard-core constraint of the model.
class InfeasibleDataError : public Error {
 public:
  using Error::Error;
};

/// The pseudo likelihood has no finite maximiser.
class SeparationError : public Error {
 public:
  SeparationError(const std::string& what, std::vector<double> direction)
      : Error(what), direction_(std::move(direction)) {}
  const std::vector<double>& direction() const noexcept { return direction_; }

 private:
  std::vector<double> direction_;
};

/// A sensitivity or design matrix is singular.
class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(const std::string& what, std::vector<std::string> null_parameters)
      : Error(what), null_parameters_(std::move(null_parameters)) {}
  const std::vector<std::string>& null_parameters() const noexcept { return null_parameters_; }

 private:
  std::vector<std::string> null_parameters_;
};

/// Simulation could not proceed (unbounded intensity, infeasible start, ...).
class SimulationError : public Error {
 public:
  using Error::Error;
};

}  // namespace smpp
