// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace lossinfo {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad probabilities, mismatched atom sets, wrong value kinds.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A Bayes-act search that could not run or did not converge.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Subtraction of two infinities of the same sign.
class IndeterminateForm : public Error {
 public:
  using Error::Error;
};

}  // namespace lossinfo
