// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace halluprobe {

enum class ErrorCode {
  EmptySequence,
  DimensionMismatch,
  NonFiniteInput,
  IoFailure,
  InvariantViolation,
  BadMagic,
  UnsupportedVersion,
  TruncatedFile,
  InsufficientData,
  SingleClassData,
  UnlabeledData,
  ConfigMismatch,
  MissingSite,
  EmptyEnsemble,
  EmptyOutcomes,
  InvalidSpec,
  UnknownFixture,
  InvalidArgument,
  ParseError,
};

constexpr std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::SingleClassData: return "SingleClassData";
    case ErrorCode::UnlabeledData: return "UnlabeledData";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::MissingSite: return "MissingSite";
    case ErrorCode::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::EmptyOutcomes: return "EmptyOutcomes";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::UnknownFixture: return "UnknownFixture";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every library failure is reported as an Error carrying a stable code.
/// The CLI prints `error_name(code())` verbatim so scripts can match on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the error-name prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace halluprobe
