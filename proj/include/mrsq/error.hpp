#pragma once

#include <stdexcept>
#include <string>

namespace mrsq {

/// Invalid configuration (bad axis geometry, unknown names, malformed config files).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs that violate a documented precondition or invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values or divergence during a numeric computation.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, long index = -1)
      : std::runtime_error(what), index_(index) {}

  /// Offending parameter index, or -1 when not attributable.
  long index() const noexcept { return index_; }

 private:
  long index_;
};

/// Misuse of an API contract (e.g. backward pass on a stale forward cache).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Persisted data that cannot be read back (corruption, fingerprint mismatch).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mrsq
