#pragma once

#include <stdexcept>
#include <string>

namespace wellprobe {

/// Base class for all errors raised by this library. Everything that can go
/// wrong at the API boundary (bad arguments, infeasible subsets, exceeded
/// budgets) derives from this, so callers can catch one type.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed inputs: mismatched sizes, out-of-range indices, bad options.
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(what) {}
};

/// A projection onto the solution set of an inconsistent row subset.
class InfeasibleSubset : public Error {
 public:
  explicit InfeasibleSubset(const std::string& what) : Error(what) {}
};

/// A combinatorial search whose candidate count exceeds the configured budget.
class BudgetExceeded : public Error {
 public:
  explicit BudgetExceeded(const std::string& what) : Error(what) {}
};

/// Problem sizes beyond what the dense-factorization paths are meant for.
class SizeLimitExceeded : public Error {
 public:
  explicit SizeLimitExceeded(const std::string& what) : Error(what) {}
};

/// Configuration file / experiment setup problems (unknown keys, bad combos).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

/// A request that is well-formed but outside what the implementation
/// supports (e.g. the characteristic oracle away from Courant number 1).
class UnsupportedConfiguration : public Error {
 public:
  explicit UnsupportedConfiguration(const std::string& what) : Error(what) {}
};

}  // namespace wellprobe
