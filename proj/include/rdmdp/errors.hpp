#pragma once

#include <stdexcept>
#include <string>

namespace rdmdp {

// Bad inputs use std::invalid_argument directly. The types below name the
// remaining failure classes so callers (and the CLI) can tell them apart.

/// A documented precondition or internal consistency rule was broken.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed text input. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Run configuration is inconsistent (detected before any simulation starts).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact enumeration would exceed its size guard.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative numerical procedure failed to converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sampling was requested from a store with nothing to sample.
class EmptyStoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The delay channel received more than K consecutive over-maximum delays.
class ChannelOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rdmdp
