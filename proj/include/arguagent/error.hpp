// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace arguagent {

enum class ErrorKind {
  // roster / domain
  DuplicateStudentId,
  EmptyClass,
  InvalidLevel,
  InvalidSpan,
  ParseError,
  // statistics
  LengthMismatch,
  InvalidMatrix,
  DegenerateRatings,
  DegenerateLabels,
  InsufficientData,
  DegenerateData,
  ZeroTotal,
  // scoring / clustering
  BackendUnavailable,
  MalformedReply,
  SchemaViolation,
  InvalidPartition,
  // grouping / simulation
  GroupTooSmall,
  ClassTooSmall,
  InvalidDistribution,
  // service
  UnknownClass,
  UnknownStudent,
  WrongStatus,
  InvalidEdit,
  Conflict,
  Io,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Domain error carrying a machine-readable kind. Every failure the library
/// reports on purpose is one of these; anything else is a bug.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace arguagent
