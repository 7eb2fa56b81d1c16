#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace automl {

enum class ErrorCode {
  // cards
  MalformedDocument,
  SchemaViolation,
  EmptyLabelSpace,
  DefaultOutOfDomain,
  // registry
  InvalidRecord,
  RegressionRejected,
  UnknownModelCard,
  IoFailure,
  CorruptRegistry,
  // composer
  EmptyLog,
  // encoder
  DimensionMismatch,
  // transfer
  NoNeighbors,
  IncompatibleConfigs,
  // oracle
  MalformedPrompt,
  MissingSection,
  EmptyHyperparameters,
  BadLogLine,
  NonMonotoneEpochs,
  EndpointUnreachable,
  AuthFailure,
  BudgetExceeded,
  BackendError,
  // tuner
  BadConstraint,
  AllCandidatesFiltered,
  EmptyGrid,
  // bench
  DivergedTraining,
  PreconditionViolation,
  // service
  UnknownSession,
  WrongState,
  Busy,
};

std::string_view to_string(ErrorCode code);

/// Every failure the library reports. `field()` carries a dotted path into
/// the offending document when one applies (e.g. `arch_hparams.lr.default`).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

}  // namespace automl
