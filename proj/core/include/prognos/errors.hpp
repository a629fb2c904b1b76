#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prognos {

enum class ErrorKind {
  // validation
  MissingColumn,
  DuplicateId,
  OutOfRangeValue,
  EmptyCohort,
  NoFeatures,
  DimensionMismatch,
  NoEvents,
  NonFiniteInput,
  LengthMismatch,
  EmptyInput,
  EmptyPath,
  GridOutOfRange,
  ScoreOutOfRange,
  MissingGenotype,
  ModelDataMismatch,
  InvalidArgument,
  // numerical
  Nonconvergence,
  SingularInformation,
  MonotoneLikelihood,
  NotConverged,
  DegenerateResample,
  ZeroCensoringWeight,
  // io
  Io,
};

std::string_view error_kind_name(ErrorKind kind) noexcept;

enum class ErrorCategory { Validation, Numerical, Io };

ErrorCategory error_category(ErrorKind kind) noexcept;

/// Process exit code for a failure of the given kind: 2 validation, 3 numerical, 4 I/O.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace prognos
