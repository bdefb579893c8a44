#include "alloydpo/error.hpp"

namespace alloydpo {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownElement: return "UnknownElement";
    case ErrorCode::EmptyFormula: return "EmptyFormula";
    case ErrorCode::MalformedNumber: return "MalformedNumber";
    case ErrorCode::MalformedTriple: return "MalformedTriple";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::NormalizationError: return "NormalizationError";
    case ErrorCode::EmptyTable: return "EmptyTable";
    case ErrorCode::StoreCorrupt: return "StoreCorrupt";
    case ErrorCode::OracleFailure: return "OracleFailure";
    case ErrorCode::MissingLattice: return "MissingLattice";
    case ErrorCode::EmptyRoleTable: return "EmptyRoleTable";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::InsufficientRejectPool: return "InsufficientRejectPool";
    case ErrorCode::SequenceTooShort: return "SequenceTooShort";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::MissingProperty: return "MissingProperty";
    case ErrorCode::IntegerizationFailure: return "IntegerizationFailure";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::DegenerateRoles: return "DegenerateRoles";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::StageFailure: return "StageFailure";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace alloydpo
