// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace spikeforge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes that do not compose (matmul inner dims, conv output size, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf produced or consumed by a public operation.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Layer ordering or model structure violates an operation's precondition.
class StructureError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents (bad magic, version mismatch, truncation).
class FormatError : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Inconsistent inputs across files or arguments (e.g. image/label counts).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace spikeforge
