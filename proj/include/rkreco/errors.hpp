#pragma once

#include <stdexcept>
#include <string>

namespace rkreco {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Anchor points are collinear (or too close to it) and cannot carry an
// affine cardinal basis.
class UnisolvencyError : public Error {
 public:
  explicit UnisolvencyError(const std::string& msg) : Error(msg) {}
};

// Cholesky factorization failed: duplicate or numerically coincident
// points, or a synthetic matrix that is not positive definite.
class SingularError : public Error {
 public:
  explicit SingularError(const std::string& msg) : Error(msg) {}
};

// Supplied norm bound is smaller than the norm of the solution itself.
class BoundTooSmallError : public Error {
 public:
  explicit BoundTooSmallError(const std::string& msg) : Error(msg) {}
};

// Brute-force oracle refuses instances beyond its enumeration cap.
class InstanceTooLargeError : public Error {
 public:
  explicit InstanceTooLargeError(const std::string& msg) : Error(msg) {}
};

// CSV or model-file syntax problem; carries row/column diagnostics in
// the message.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

class EmptyInputError : public Error {
 public:
  explicit EmptyInputError(const std::string& msg) : Error(msg) {}
};

class NonFiniteValueError : public Error {
 public:
  explicit NonFiniteValueError(const std::string& msg) : Error(msg) {}
};

}  // namespace rkreco
