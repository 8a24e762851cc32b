#ifndef LIOUVILLE_ERRORS_HPP_
#define LIOUVILLE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace liouville {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Precondition failures (bad parameters, bounds). The CLI maps these to exit 2.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Numerical failures (no convergence, variance blow-up). The CLI maps these to exit 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class PoleError : public PreconditionError {
 public:
  PoleError(const std::string& what, int order = 1) : PreconditionError(what), order_(order) {}
  int order() const { return order_; }

 private:
  int order_;
};

class ZeroError : public PreconditionError {
 public:
  ZeroError(const std::string& what, int order = 1) : PreconditionError(what), order_(order) {}
  int order() const { return order_; }

 private:
  int order_;
};

class DomainError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};
class BranchError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};
class DivergenceError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};
class BoundsError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};
class RegimeError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};
class SingularCellError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class ContinuationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class ConsistencyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class PrecisionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class FactorizationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class InsufficientTailError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace liouville

#endif  // LIOUVILLE_ERRORS_HPP_
