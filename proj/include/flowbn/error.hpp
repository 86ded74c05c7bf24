#pragma once

#include <stdexcept>
#include <string>

namespace flowbn {

// Malformed or contract-violating input (bad shapes, unknown ids, bad JSON).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss or gradient.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A non-finite value appeared while evaluating a flow.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A normalizer could not be inverted.
class InversionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rejected graph query (unknown node, overlapping sets, empty scope).
class QueryError : public InputError {
 public:
  using InputError::InputError;
};

// A statistic was asked of a sample with no spread.
class DegenerateInputError : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace flowbn
