#pragma once

#include <stdexcept>
#include <string>

namespace rase {

enum class ErrorKind {
  EmptyClass,
  IndexOutOfRange,
  DimensionMismatch,
  SingularMatrix,
  DomainError,
  KTooLarge,
  InvalidBound,
  DegenerateSample,
  NonConvergence,
  FitFailure,
  NonPdParameters,
  DataError,
  SchemaError,
  UsageError,
};

const char* error_kind_name(ErrorKind kind);

class RaseError : public std::runtime_error {
 public:
  RaseError(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw RaseError(kind, message);
}

}  // namespace rase
