#pragma once

#include <stdexcept>
#include <string>

namespace fairlp {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidInput : Error {
  using Error::Error;
};

/// Raised when an empirical estimate is requested from zero observations.
struct EmptyData : Error {
  using Error::Error;
};

/// Conditioning on an event of probability zero.
struct DegenerateConditioning : Error {
  using Error::Error;
};

struct InvalidProgram : Error {
  using Error::Error;
};

struct NumericalFailure : Error {
  using Error::Error;
};

/// Distortion budget below the minimum feasible value; carries that minimum.
struct InfeasibleBudget : Error {
  InfeasibleBudget(const std::string& what, double d_min_arg)
      : Error(what), d_min(d_min_arg) {}
  double d_min;
};

struct UnsupportedShape : Error {
  using Error::Error;
};

struct SubstitutionUnavailable : Error {
  using Error::Error;
};

/// Instance does not match the minority-underprivileged convention.
struct ConventionViolated : Error {
  using Error::Error;
};

/// Brute-force search space too large to enumerate.
struct TooLarge : Error {
  using Error::Error;
};

/// Malformed input file; carries the 1-based line number.
struct ParseError : Error {
  ParseError(const std::string& what, std::size_t line_arg)
      : Error(what + " (line " + std::to_string(line_arg) + ")"), line(line_arg) {}
  std::size_t line;
};

}  // namespace fairlp
