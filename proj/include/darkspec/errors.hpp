#pragma once

#include <stdexcept>
#include <string>

namespace darkspec {

/// Input outside the mathematical domain of an operation (negative window,
/// horizon before commencement, empty aggregate, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid distribution or model parameters.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A moment that does not exist for the requested distribution.
class VarianceUndefinedError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Severity requested from a sample with no events.
class NoEventsError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Caller broke an operation's precondition (e.g. unvalidated narrative).
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A mitigation whose expected loss is not strictly below the baseline.
class MitigationInvalidError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Malformed configuration or missing keys.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace darkspec
