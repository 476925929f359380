#pragma once

#include <stdexcept>
#include <string>

namespace certikit {

/// Process exit codes used by the command-line front end.
enum class ExitCode : int {
  success = 0,
  config_error = 2,
  capacity = 3,
  numerical = 4,
  not_certifiable = 5,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept = 0;
};

/// Malformed arguments: bad indices, dimension mismatch, unparsable files.
class InputError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::config_error; }
};

/// A combinatorial guard was exceeded.
class CapacityError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::capacity; }
};

/// The LP engine or a reduction step broke down numerically.
class NumericalError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::numerical; }
};

/// The requested (test, label) pair cannot be certified from the given data.
class NotCertifiableError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::not_certifiable; }
};

/// A sample stream ran dry before enough qualifying chunks were seen.
class InsufficientSampleError : public NotCertifiableError {
 public:
  InsufficientSampleError(const std::string& what, std::size_t scanned)
      : NotCertifiableError(what), chunks_scanned(scanned) {}
  std::size_t chunks_scanned;
};

/// Zero certificate coefficient: no finite sample size certifies.
class UnboundableError : public NotCertifiableError {
 public:
  using NotCertifiableError::NotCertifiableError;
};

/// Rejection sampler exceeded its attempt cap.
class StarvationError : public CapacityError {
 public:
  using CapacityError::CapacityError;
};

}  // namespace certikit
