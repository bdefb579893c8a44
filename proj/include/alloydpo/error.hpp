#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace alloydpo {

enum class ErrorCode {
  InvalidArgument,
  UnknownElement,
  EmptyFormula,
  MalformedNumber,
  MalformedTriple,
  SchemaError,
  NormalizationError,
  EmptyTable,
  StoreCorrupt,
  OracleFailure,
  MissingLattice,
  EmptyRoleTable,
  EmptyPool,
  InsufficientRejectPool,
  SequenceTooShort,
  NonFiniteLoss,
  MissingProperty,
  IntegerizationFailure,
  EmptyInput,
  TooFewSamples,
  DegenerateRoles,
  LengthMismatch,
  IoError,
  ConfigError,
  MissingInput,
  StageFailure,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this type; code() identifies the failure
// class named in the module contracts.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace alloydpo
