#pragma once

#include <stdexcept>
#include <string>

namespace purebox {

enum class ErrorKind {
  // corpus
  SourceUnavailable,
  EmptyResult,
  UnknownHash,
  InsufficientData,
  OutOfRange,
  // zoo
  DataMismatch,
  DivergedTraining,
  EmptySplit,
  // genattack
  InvalidSpec,
  MissingFrozenNoise,
  EnsembleMismatch,
  ShapeMismatch,
  // transfer
  EmptyEvalSet,
  OracleFailure,
  ProtocolMismatch,
  // blendquery
  AlphaOutOfRange,
  InvalidTarget,
  NoBoundaryFound,
  QueryBudgetExhausted,
  EmptyBoundarySet,
  // orchestrate
  EmptyRecords,
  ConfigInvalid,
  StageFailed,
  // shared
  IoError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace purebox
