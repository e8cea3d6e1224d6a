#include "bolab/error.hpp"

namespace bolab {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NonDifferentiable: return "NonDifferentiable";
    case ErrorCode::NonHomogeneous: return "NonHomogeneous";
    case ErrorCode::MinimumNotAtOrigin: return "MinimumNotAtOrigin";
    case ErrorCode::DegenerateHessian: return "DegenerateHessian";
    case ErrorCode::NonPositive: return "NonPositive";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::SizeError: return "SizeError";
    case ErrorCode::ExtentOverflow: return "ExtentOverflow";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SingularShift: return "SingularShift";
    case ErrorCode::DegenerateLevel: return "DegenerateLevel";
    case ErrorCode::OutsideValidity: return "OutsideValidity";
    case ErrorCode::ClusterAmbiguity: return "ClusterAmbiguity";
    case ErrorCode::DegenerateParametrization: return "DegenerateParametrization";
    case ErrorCode::OrderMismatch: return "OrderMismatch";
    case ErrorCode::DegenerateMinimum: return "DegenerateMinimum";
    case ErrorCode::ContinuumOfMinima: return "ContinuumOfMinima";
    case ErrorCode::MatchAmbiguity: return "MatchAmbiguity";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::NonPositiveError: return "NonPositiveError";
    case ErrorCode::IOError: return "IOError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::size_t offset)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      offset_(offset) {}

}  // namespace bolab
