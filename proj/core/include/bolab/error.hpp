#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bolab {

enum class ErrorCode {
  // expr
  SyntaxError,
  UnknownIdentifier,
  DomainError,
  NonDifferentiable,
  // model
  NonHomogeneous,
  MinimumNotAtOrigin,
  DegenerateHessian,
  NonPositive,
  InvalidParameter,
  // discretize / eigensolve
  SizeError,
  ExtentOverflow,
  NoConvergence,
  SingularShift,
  // transverse / effective
  DegenerateLevel,
  OutsideValidity,
  ClusterAmbiguity,
  // hypersurface
  DegenerateParametrization,
  OrderMismatch,
  DegenerateMinimum,
  ContinuumOfMinima,
  MatchAmbiguity,
  // harness
  ConfigError,
  InsufficientPoints,
  NonPositiveError,
  IOError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library. The code identifies the failure
/// class; `offset` is a byte position for parse errors and npos otherwise.
class Error : public std::runtime_error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  Error(ErrorCode code, const std::string& message, std::size_t offset = npos);

  ErrorCode code() const noexcept { return code_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  ErrorCode code_;
  std::size_t offset_;
};

}  // namespace bolab
