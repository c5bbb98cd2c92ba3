#pragma once

#include <stdexcept>
#include <string>

namespace xvg {

/// Bad argument or violated precondition at an API boundary.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// On-disk layout or file content does not match what was expected.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A training step produced something unusable (non-finite loss or gradient).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation protocol violated (e.g. a query without a true match).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace xvg
