#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ssgp {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: dimension mismatch, non-finite values, out-of-domain flags.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A Cholesky pivot fell at or below the pivot tolerance.
class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(std::size_t pivot, double value)
      : Error("matrix is not positive definite (pivot " + std::to_string(pivot) +
              " = " + std::to_string(value) + ")"),
        pivot_(pivot),
        value_(value) {}

  std::size_t pivot() const noexcept { return pivot_; }
  double value() const noexcept { return value_; }

 private:
  std::size_t pivot_;
  double value_;
};

/// Correlation matrix could not be factored even at the largest nugget.
class IllConditioned : public Error {
 public:
  using Error::Error;
};

/// Every multi-start of the likelihood optimizer failed.
class OptimizerFailed : public Error {
 public:
  using Error::Error;
};

/// A Gibbs scan failed; carries the scan index (1-based) where it happened.
class SamplerFailed : public Error {
 public:
  SamplerFailed(std::size_t scan, const std::string& what)
      : Error("sampler failed at scan " + std::to_string(scan) + ": " + what), scan_(scan) {}

  std::size_t scan() const noexcept { return scan_; }

 private:
  std::size_t scan_;
};

/// More replicates of a benchmark failed than the quota allows.
class QuotaExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace ssgp
