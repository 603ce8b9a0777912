#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace minsoftmax {

enum class ErrorKind {
  InvalidArgument,
  ShapeMismatch,
  NonStochasticRow,
  OutOfRangeTransition,
  NonFiniteCost,
  NonSymmetricMatrix,
  NotPositiveSemidefinite,
  NotPositiveDefinite,
  AllAlphasInfinite,
  TemperatureZero,
  SupportViolation,
  DimensionTooLarge,
  DivergentIntegrand,
  MBelowCritical,
  NoConvergence,
  NoFiniteCritical,
  UnstableClosedLoop,
  ModelMismatch,
  DegenerateGrid,
  ParseError,
  SchemaVersionUnsupported,
  ValidationError,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Where in a backward recursion an error was raised. Unset fields are unknown
/// or not applicable.
struct ErrorContext {
  std::optional<int> stage;
  std::optional<int> state;
  std::optional<int> input;
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, ErrorContext context = {});

  ErrorKind kind() const noexcept { return kind_; }
  const ErrorContext& context() const noexcept { return context_; }

  /// Single-line `key=value` rendering for machine consumption.
  std::string machine_line() const;

 private:
  ErrorKind kind_;
  ErrorContext context_;
};

/// Raised when γ_H I − 2DᵀP_kD is not positive definite.
class MBelowCriticalError : public Error {
 public:
  /// A negative stage means the stage is unknown.
  MBelowCriticalError(int stage, double min_eigenvalue);

  int stage() const noexcept { return stage_; }
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  int stage_;
  double min_eigenvalue_;
};

}  // namespace minsoftmax
