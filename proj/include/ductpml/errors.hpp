#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ductpml {

/// Coarse error classes; the CLI maps them onto exit codes.
enum class ErrorCategory { config, numerical, io, contract };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  [[nodiscard]] ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Argument outside the domain of a function (negative Bessel argument, point
/// outside the duct, degenerate rectangle).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error(ErrorCategory::contract, what) {}
};

/// Physical configuration violates an invariant (Mach number, lengths).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCategory::config, what) {}
};

/// k sits on (or too close to) a transverse cutoff k = sqrt(1-M^2) n pi / d.
class ResonanceError : public Error {
 public:
  explicit ResonanceError(const std::string& what)
      : Error(ErrorCategory::config, what) {}
};

/// Kernel evaluated at its singular point.
class SingularityError : public Error {
 public:
  explicit SingularityError(const std::string& what)
      : Error(ErrorCategory::numerical, what) {}
};

/// Modal series requested where it does not converge geometrically.
class RepresentationError : public Error {
 public:
  explicit RepresentationError(const std::string& what)
      : Error(ErrorCategory::contract, what) {}
};

/// Finite layer whose amplitude denominators vanish.
class DegenerateLayerError : public Error {
 public:
  explicit DegenerateLayerError(const std::string& what)
      : Error(ErrorCategory::numerical, what) {}
};

/// Zero pivot in a banded factorization.
class IllPosedError : public Error {
 public:
  explicit IllPosedError(const std::string& what)
      : Error(ErrorCategory::numerical, what) {}
};

/// Mismatched grids, non-nested levels and similar caller mistakes.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what)
      : Error(ErrorCategory::contract, what) {}
};

class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& what)
      : Error(ErrorCategory::numerical, what) {}
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorCategory::config,
              "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

/// A Monte Carlo estimator threw for one seed; the study is aborted.
class StudyError : public Error {
 public:
  StudyError(unsigned long long seed, const std::string& what)
      : Error(ErrorCategory::numerical,
              "seed " + std::to_string(seed) + ": " + what),
        seed_(seed) {}

  [[nodiscard]] unsigned long long seed() const noexcept { return seed_; }

 private:
  unsigned long long seed_;
};

}  // namespace ductpml
