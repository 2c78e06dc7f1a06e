#include "purebox/core/error.hpp"

namespace purebox {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SourceUnavailable: return "SourceUnavailable";
    case ErrorKind::EmptyResult: return "EmptyResult";
    case ErrorKind::UnknownHash: return "UnknownHash";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::DataMismatch: return "DataMismatch";
    case ErrorKind::DivergedTraining: return "DivergedTraining";
    case ErrorKind::EmptySplit: return "EmptySplit";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::MissingFrozenNoise: return "MissingFrozenNoise";
    case ErrorKind::EnsembleMismatch: return "EnsembleMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::EmptyEvalSet: return "EmptyEvalSet";
    case ErrorKind::OracleFailure: return "OracleFailure";
    case ErrorKind::ProtocolMismatch: return "ProtocolMismatch";
    case ErrorKind::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorKind::InvalidTarget: return "InvalidTarget";
    case ErrorKind::NoBoundaryFound: return "NoBoundaryFound";
    case ErrorKind::QueryBudgetExhausted: return "QueryBudgetExhausted";
    case ErrorKind::EmptyBoundarySet: return "EmptyBoundarySet";
    case ErrorKind::EmptyRecords: return "EmptyRecords";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::StageFailed: return "StageFailed";
    case ErrorKind::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace purebox
