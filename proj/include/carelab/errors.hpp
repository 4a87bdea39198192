#pragma once

#include <stdexcept>
#include <string>

namespace carelab {

/// Raised when a configuration value or argument falls outside its domain.
class InvalidConfiguration : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Model output that does not satisfy the diagnosis or proposal schema.
/// The offending text is kept so it can be written to the audit log.
class SchemaViolation : public std::runtime_error {
 public:
  SchemaViolation(const std::string &reason, std::string raw_text)
      : std::runtime_error(reason), raw_text_(std::move(raw_text)) {}

  const std::string &raw_text() const noexcept { return raw_text_; }

 private:
  std::string raw_text_;
};

/// Transport-level failure talking to a model endpoint (single attempt).
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The model backend could not be reached after all retries.
class BackendUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Audit log ordering or chain-integrity violation.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientSample : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace carelab
