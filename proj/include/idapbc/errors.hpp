#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace idapbc {

enum class ErrorCode {
  DimensionMismatch,
  SingularMass,
  SingularGram,
  ZeroAnnihilatorRow,
  NotAtEquilibrium,
  NoSolution,
  WrongDimensions,
  RhoNotPositive,
  NegativeDefiniteEta,
  ConstraintViolation,
  InvalidDesign,
  InvalidArgument,
  ConfigParse,
  UnknownBenchmark,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::SingularMass: return "SINGULAR_MASS";
    case ErrorCode::SingularGram: return "SINGULAR_GRAM";
    case ErrorCode::ZeroAnnihilatorRow: return "ZERO_ANNIHILATOR_ROW";
    case ErrorCode::NotAtEquilibrium: return "NOT_AT_EQUILIBRIUM";
    case ErrorCode::NoSolution: return "NO_SOLUTION";
    case ErrorCode::WrongDimensions: return "WRONG_DIMENSIONS";
    case ErrorCode::RhoNotPositive: return "RHO_NOT_POSITIVE";
    case ErrorCode::NegativeDefiniteEta: return "NEGATIVE_DEFINITE_ETA";
    case ErrorCode::ConstraintViolation: return "CONSTRAINT_VIOLATION";
    case ErrorCode::InvalidDesign: return "INVALID_DESIGN";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::ConfigParse: return "CONFIG_PARSE";
    case ErrorCode::UnknownBenchmark: return "UNKNOWN_BENCHMARK";
  }
  return "UNKNOWN";
}

/// Domain error carrying a machine-readable code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace idapbc
