#include "automl/error.hpp"

namespace automl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::EmptyLabelSpace: return "EmptyLabelSpace";
    case ErrorCode::DefaultOutOfDomain: return "DefaultOutOfDomain";
    case ErrorCode::InvalidRecord: return "InvalidRecord";
    case ErrorCode::RegressionRejected: return "RegressionRejected";
    case ErrorCode::UnknownModelCard: return "UnknownModelCard";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::CorruptRegistry: return "CorruptRegistry";
    case ErrorCode::EmptyLog: return "EmptyLog";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NoNeighbors: return "NoNeighbors";
    case ErrorCode::IncompatibleConfigs: return "IncompatibleConfigs";
    case ErrorCode::MalformedPrompt: return "MalformedPrompt";
    case ErrorCode::MissingSection: return "MissingSection";
    case ErrorCode::EmptyHyperparameters: return "EmptyHyperparameters";
    case ErrorCode::BadLogLine: return "BadLogLine";
    case ErrorCode::NonMonotoneEpochs: return "NonMonotoneEpochs";
    case ErrorCode::EndpointUnreachable: return "EndpointUnreachable";
    case ErrorCode::AuthFailure: return "AuthFailure";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::BadConstraint: return "BadConstraint";
    case ErrorCode::AllCandidatesFiltered: return "AllCandidatesFiltered";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::DivergedTraining: return "DivergedTraining";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::WrongState: return "WrongState";
    case ErrorCode::Busy: return "Busy";
  }
  return "Unknown";
}

}  // namespace automl
