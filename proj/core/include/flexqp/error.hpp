#pragma once

#include <stdexcept>
#include <string>

namespace flexqp {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension mismatch or malformed argument.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Out-of-range algorithm parameter (nonpositive penalty, negative threshold, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Zero pivot during LDL^T or a CG breakdown that survived a restart.
class FactorizationError : public Error {
 public:
  using Error::Error;
};

/// Problem/weight/task file could not be parsed or has the wrong shape.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Network produced a non-finite output.
class PolicyError : public Error {
 public:
  using Error::Error;
};

/// Invalid generator specification or generator failure.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// SQP evaluator failure (non-finite function or derivative value).
class SqpError : public Error {
 public:
  using Error::Error;
};

}  // namespace flexqp
