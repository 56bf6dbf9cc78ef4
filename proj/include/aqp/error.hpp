#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aqp {

enum class ErrorCode {
  // store
  MalformedRow,
  ParseError,
  NullValue,
  WrongKind,
  EmptyDataset,
  UnknownAttribute,
  // querygen
  InvalidTemplate,
  InvalidTarget,
  EmptyCombos,
  EmptyFilterSet,
  ShapeMismatch,
  TooFewQueries,
  // executor
  EmptyAggregate,
  Unsupported,
  // encoder
  UnknownToken,
  NumericOverflow,
  MalformedMatrix,
  // nnet / metrics
  LengthMismatch,
  DivergedLoss,
  VersionMismatch,
  VocabularyMismatch,
  DegenerateRange,
  EmptyList,
  // io
  Io,
  InvalidArgument,
  // cli: an artifact does not belong to the upstream artifact it names
  ArtifactMismatch,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for errors caused by bad inputs (exit code 1) rather than runtime failures (exit code 2).
bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace aqp
