#include "caprob/error.h"

namespace caprob {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::UnknownBlock: return "UnknownBlock";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::AdaptiveAttackNoClosedForm: return "AdaptiveAttackNoClosedForm";
    case ErrorKind::InvalidCount: return "InvalidCount";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::ZeroNoise: return "ZeroNoise";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::DegenerateFeatures: return "DegenerateFeatures";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::DegenerateVariance: return "DegenerateVariance";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::UnknownKey: return "UnknownKey";
    case ErrorKind::TypeMismatch: return "TypeMismatch";
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::RowLengthMismatch: return "RowLengthMismatch";
    case ErrorKind::RowCountMismatch: return "RowCountMismatch";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace caprob
