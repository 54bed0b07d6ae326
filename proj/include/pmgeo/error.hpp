#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pmgeo {

enum class ErrorKind {
  invalid_input,
  degenerate_input,
  empty_result,
  numerical_failure,
  training_failure,
  integrity,
  unsupported_version,
};

/// Base of every error raised by the library. The kind selects the CLI exit
/// code (see exit_code()).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what) : Error(ErrorKind::invalid_input, what) {}
};

class DegenerateInput : public Error {
 public:
  explicit DegenerateInput(const std::string& what) : Error(ErrorKind::degenerate_input, what) {}
};

class EmptyResult : public Error {
 public:
  explicit EmptyResult(const std::string& what) : Error(ErrorKind::empty_result, what) {}
};

/// Iterative kernel gave up. Carries the last residual and, where it makes
/// sense, a copy of the iterate at failure.
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, double residual, std::vector<double> snapshot = {})
      : Error(ErrorKind::numerical_failure, what), residual_(residual), snapshot_(std::move(snapshot)) {}
  double residual() const noexcept { return residual_; }
  const std::vector<double>& snapshot() const noexcept { return snapshot_; }

 private:
  double residual_;
  std::vector<double> snapshot_;
};

class TrainingFailure : public Error {
 public:
  TrainingFailure(const std::string& what, int epoch) : Error(ErrorKind::training_failure, what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& what) : Error(ErrorKind::integrity, what) {}
};

class UnsupportedVersion : public Error {
 public:
  explicit UnsupportedVersion(const std::string& what) : Error(ErrorKind::unsupported_version, what) {}
};

/// 2 invalid input, 3 numerical failure, 4 integrity error.
int exit_code(ErrorKind kind) noexcept;

}  // namespace pmgeo
