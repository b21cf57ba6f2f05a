#pragma once

#include <stdexcept>
#include <string>

namespace liftrc {

// Numeric values match the C API codes in liftrc.h and the CLI exit codes.
enum class ErrorCode : int {
  kOk = 0,
  kParse = 1,
  kNotLiftable = 2,
  kZeroEvidence = 3,
  kDisagreement = 4,
  kOracleInfeasible = 5,
  kNumericGuard = 6,
  kInvalidArgument = 7,
  kInternal = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class NotLiftableError : public Error {
 public:
  NotLiftableError(std::string prv, const std::string& what)
      : Error(ErrorCode::kNotLiftable, what), prv_(std::move(prv)) {}
  // Printed form of the PRV that would need branching.
  const std::string& prv() const noexcept { return prv_; }

 private:
  std::string prv_;
};

class ZeroEvidenceError : public Error {
 public:
  explicit ZeroEvidenceError(const std::string& what)
      : Error(ErrorCode::kZeroEvidence, what) {}
};

class DisagreementError : public Error {
 public:
  explicit DisagreementError(const std::string& what)
      : Error(ErrorCode::kDisagreement, what) {}
};

class OracleInfeasibleError : public Error {
 public:
  explicit OracleInfeasibleError(const std::string& what)
      : Error(ErrorCode::kOracleInfeasible, what) {}
};

class NumericGuardError : public Error {
 public:
  explicit NumericGuardError(const std::string& what)
      : Error(ErrorCode::kNumericGuard, what) {}
};

class InvalidArgumentError : public Error {
 public:
  explicit InvalidArgumentError(const std::string& what)
      : Error(ErrorCode::kInvalidArgument, what) {}
};

class InternalError : public Error {
 public:
  explicit InternalError(const std::string& what)
      : Error(ErrorCode::kInternal, what) {}
};

}  // namespace liftrc
