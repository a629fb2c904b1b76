#include "prognos/errors.hpp"

namespace prognos {

std::string_view error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::OutOfRangeValue: return "OutOfRangeValue";
    case ErrorKind::EmptyCohort: return "EmptyCohort";
    case ErrorKind::NoFeatures: return "NoFeatures";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NoEvents: return "NoEvents";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::EmptyPath: return "EmptyPath";
    case ErrorKind::GridOutOfRange: return "GridOutOfRange";
    case ErrorKind::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorKind::MissingGenotype: return "MissingGenotype";
    case ErrorKind::ModelDataMismatch: return "ModelDataMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Nonconvergence: return "Nonconvergence";
    case ErrorKind::SingularInformation: return "SingularInformation";
    case ErrorKind::MonotoneLikelihood: return "MonotoneLikelihood";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::DegenerateResample: return "DegenerateResample";
    case ErrorKind::ZeroCensoringWeight: return "ZeroCensoringWeight";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

ErrorCategory error_category(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Nonconvergence:
    case ErrorKind::SingularInformation:
    case ErrorKind::MonotoneLikelihood:
    case ErrorKind::NotConverged:
    case ErrorKind::DegenerateResample:
    case ErrorKind::ZeroCensoringWeight:
      return ErrorCategory::Numerical;
    case ErrorKind::Io:
      return ErrorCategory::Io;
    default:
      return ErrorCategory::Validation;
  }
}

int exit_code(ErrorKind kind) noexcept {
  switch (error_category(kind)) {
    case ErrorCategory::Validation: return 2;
    case ErrorCategory::Numerical: return 3;
    case ErrorCategory::Io: return 4;
  }
  return 1;
}

}  // namespace prognos
