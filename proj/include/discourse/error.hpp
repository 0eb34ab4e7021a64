#pragma once

#include <stdexcept>
#include <string>

namespace discourse {

/// Base for all errors raised by the pipeline modules.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Input that violates a documented file format (bad CSV header, bad JSON).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A precondition of an operation was violated by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Transport-level failure of a remote backend; the whole call may be retried.
class RetryableError : public Error {
 public:
  using Error::Error;
};

/// A fact-check stage failed for one post after its retry budget.
class StageError : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

/// Stored bytes no longer match the digest recorded in the manifest.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// Per-item failure recorded while a batch keeps going.
struct ItemError {
  std::string item_id;
  std::string message;
};

}  // namespace discourse
