#pragma once

#include <stdexcept>
#include <string>

namespace pmpb {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or configuration. `line()` is 0 when not line-specific.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Geometry or grid construction failure (sub-grid features, stencil support, node budget).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Evaluation of a multipole field at (or numerically at) its own center.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Iterative method (Krylov solve or induction SCF) did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace pmpb
