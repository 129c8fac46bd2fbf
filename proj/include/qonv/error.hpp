#pragma once

#include <stdexcept>
#include <string>

namespace qonv {

/// Base of every error thrown by the library. `exit_code()` is what the CLI
/// returns when the error escapes to main().
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 2; }
};

/// Invalid model/encoding/experiment configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// A caller violated an operation's precondition (non-scalar loss, missing input, ...).
class ContractError : public Error {
public:
  using Error::Error;
};

/// Non-finite values or a numeric routine that failed to converge.
class NumericError : public Error {
public:
  using Error::Error;
  int exit_code() const noexcept override { return 1; }
};

class IoError : public Error {
public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// An exact property check failed. Carries a reproducible text record of the
/// offending instance.
class VerificationError : public Error {
public:
  VerificationError(const std::string& what, std::string record)
      : Error(what), record_(std::move(record)) {}
  const std::string& record() const noexcept { return record_; }
  int exit_code() const noexcept override { return 1; }

private:
  std::string record_;
};

} // namespace qonv
