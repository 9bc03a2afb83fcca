#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace caprob {

enum class ErrorKind {
  NotPositiveDefinite,
  UnknownBlock,
  InvalidArgument,
  AdaptiveAttackNoClosedForm,
  InvalidCount,
  LengthMismatch,
  TooFewSamples,
  NonFinite,
  ZeroNoise,
  ShapeMismatch,
  DegenerateFeatures,
  DimMismatch,
  DegenerateVariance,
  QuadratureFailure,
  ParseError,
  UnknownKey,
  TypeMismatch,
  MalformedHeader,
  RowLengthMismatch,
  RowCountMismatch,
  NonFiniteValue,
  IoError,
};

std::string_view to_string(ErrorKind kind);

// Every library failure is reported through this one type; `kind()` lets
// callers (and the CLI exit-code mapping) branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace caprob
