#pragma once

#include <stdexcept>
#include <string>

namespace cqr {

// Errors split by how the CLI maps them to exit codes: bad input (2) vs
// numerical failure at a point (3).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SyntaxError : InputError {
  std::size_t offset;
  SyntaxError(const std::string& what, std::size_t at)
      : InputError(what + " at offset " + std::to_string(at)), offset(at) {}
};

struct UnknownIdentifier : InputError {
  std::string name;
  UnknownIdentifier(const std::string& ident, std::size_t at)
      : InputError("unknown identifier '" + ident + "' at offset " + std::to_string(at)),
        name(ident) {}
};

struct UnknownName : InputError {
  using InputError::InputError;
};

struct MissingField : InputError {
  using InputError::InputError;
};

struct DomainError : NumericError {
  using NumericError::NumericError;
};

struct SingularMetric : NumericError {
  using NumericError::NumericError;
};

struct DimensionError : InputError {
  using InputError::InputError;
};

struct SignatureError : InputError {
  using InputError::InputError;
};

struct VarianceMismatch : InputError {
  using InputError::InputError;
};

struct NotNullError : InputError {
  using InputError::InputError;
};

struct OrderTooLow : InputError {
  using InputError::InputError;
};

struct ConditionViolated : NumericError {
  using NumericError::NumericError;
};

struct DegenerateFrame : InputError {
  using InputError::InputError;
};

}  // namespace cqr
