#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace echochan {

/// Broad failure category. The CLI maps these onto its exit codes.
enum class ErrorCategory {
  Config,   // bad configuration, flags, or parameter values
  Data,     // I/O failures and malformed files
  Numeric,  // shape mismatches, solver and convergence failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::Config, what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorCategory::Numeric, what) {}
};

class DefinitenessError : public Error {
 public:
  explicit DefinitenessError(const std::string& what) : Error(ErrorCategory::Numeric, what) {}
};

class RankError : public Error {
 public:
  explicit RankError(const std::string& what) : Error(ErrorCategory::Numeric, what) {}
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::size_t iterations)
      : Error(ErrorCategory::Numeric, what), iterations_(iterations) {}

  std::size_t iterations() const noexcept { return iterations_; }

 private:
  std::size_t iterations_;
};

/// Raised when a reservoir matrix has zero spectral radius and cannot be rescaled.
class CannotRescaleError : public Error {
 public:
  explicit CannotRescaleError(const std::string& what) : Error(ErrorCategory::Numeric, what) {}
};

class EmptyTrajectoryError : public Error {
 public:
  explicit EmptyTrajectoryError(const std::string& what) : Error(ErrorCategory::Numeric, what) {}
};

class DegenerateMetricError : public Error {
 public:
  explicit DegenerateMetricError(const std::string& what) : Error(ErrorCategory::Numeric, what) {}
};

/// NaN or infinity where finite values are required (e.g. a diverging reservoir).
class NonFiniteError : public Error {
 public:
  explicit NonFiniteError(const std::string& what) : Error(ErrorCategory::Numeric, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

class IntegrityError : public Error {
 public:
  IntegrityError(const std::string& what, std::size_t expected_bytes, std::size_t actual_bytes)
      : Error(ErrorCategory::Data, what),
        expected_bytes_(expected_bytes),
        actual_bytes_(actual_bytes) {}

  std::size_t expected_bytes() const noexcept { return expected_bytes_; }
  std::size_t actual_bytes() const noexcept { return actual_bytes_; }

 private:
  std::size_t expected_bytes_;
  std::size_t actual_bytes_;
};

class VersionError : public Error {
 public:
  explicit VersionError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

}  // namespace echochan
