#ifndef LANGSPACE_ERRORS_HPP
#define LANGSPACE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace langspace {

/// Malformed input file (bad JSON, wrong record shape).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Well-formed input that violates a domain invariant (duplicate id,
/// out-of-range coordinate, shape mismatch, missing flag value).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A metric could not be computed for a pair (missing location,
/// empty phoneme inventory, unknown id).
class MetricError : public std::runtime_error {
 public:
  explicit MetricError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Unexpected internal failure (non-finite loss, solver breakdown).
class InternalError : public std::runtime_error {
 public:
  explicit InternalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace langspace

#endif  // LANGSPACE_ERRORS_HPP
