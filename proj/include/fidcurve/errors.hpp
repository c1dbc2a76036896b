#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fidcurve {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Expression text could not be parsed. `offset` is the 0-based character
// position of the offending token.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Evaluation outside the mathematical domain: log of a non-positive value,
// division by zero, parameter outside its interval, and similar.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Coarea-mode condition weight hit a vanishing gradient. Carries the
// parameter value where |grad C| collapsed.
class SingularConditionError : public Error {
 public:
  explicit SingularConditionError(double t)
      : Error("condition gradient vanishes at t = " + std::to_string(t)),
        t_(t) {}
  double t() const { return t_; }

 private:
  double t_;
};

// Normalizing constant fell below the representable range.
class UnderflowError : public Error {
 public:
  using Error::Error;
};

// Quadrature node budget exhausted before reaching the tolerance.
class BudgetError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration. `path` addresses the offending field, e.g.
// "curve.t_min" or "prior.c".
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace fidcurve
