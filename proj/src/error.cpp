#include "minsoftmax/error.hpp"

#include <cstdio>
#include <sstream>

namespace minsoftmax {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonStochasticRow: return "NonStochasticRow";
    case ErrorKind::OutOfRangeTransition: return "OutOfRangeTransition";
    case ErrorKind::NonFiniteCost: return "NonFiniteCost";
    case ErrorKind::NonSymmetricMatrix: return "NonSymmetricMatrix";
    case ErrorKind::NotPositiveSemidefinite: return "NotPositiveSemidefinite";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::AllAlphasInfinite: return "AllAlphasInfinite";
    case ErrorKind::TemperatureZero: return "TemperatureZero";
    case ErrorKind::SupportViolation: return "SupportViolation";
    case ErrorKind::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorKind::DivergentIntegrand: return "DivergentIntegrand";
    case ErrorKind::MBelowCritical: return "MBelowCritical";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NoFiniteCritical: return "NoFiniteCritical";
    case ErrorKind::UnstableClosedLoop: return "UnstableClosedLoop";
    case ErrorKind::ModelMismatch: return "ModelMismatch";
    case ErrorKind::DegenerateGrid: return "DegenerateGrid";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SchemaVersionUnsupported: return "SchemaVersionUnsupported";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message, ErrorContext context)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      context_(context) {}

std::string Error::machine_line() const {
  std::ostringstream os;
  os << "error kind=" << to_string(kind_);
  if (context_.stage) os << " stage=" << *context_.stage;
  if (context_.state) os << " state=" << *context_.state;
  if (context_.input) os << " input=" << *context_.input;
  os << " message=\"" << what() << "\"";
  return os.str();
}

namespace {
std::string m_message(int stage, double min_eig) {
  char buf[160];
  if (stage < 0)
    std::snprintf(buf, sizeof buf,
                  "gamma_H*I - 2*D'*P*D is not positive definite (min eigenvalue %.6g)", min_eig);
  else
    std::snprintf(buf, sizeof buf,
                  "gamma_H*I - 2*D'*P_%d*D is not positive definite (min eigenvalue %.6g)",
                  stage, min_eig);
  return buf;
}
}  // namespace

MBelowCriticalError::MBelowCriticalError(int stage, double min_eigenvalue)
    : Error(ErrorKind::MBelowCritical, m_message(stage, min_eigenvalue),
            ErrorContext{stage < 0 ? std::nullopt : std::optional<int>(stage), std::nullopt,
                         std::nullopt}),
      stage_(stage),
      min_eigenvalue_(min_eigenvalue) {}

}  // namespace minsoftmax
