#pragma once

#include <stdexcept>
#include <string>

namespace dbaug {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform for the named op.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A NaN/Inf appeared where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Bad argument values (ranges, preconditions).
class ValueError : public Error {
 public:
  using Error::Error;
};

/// Malformed input files.
class InputError : public Error {
 public:
  using Error::Error;
};

/// An internal contract was broken (e.g. frozen parameters were mutated).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Decoding produced no usable sentence.
class GenerationError : public Error {
 public:
  using Error::Error;
};

}  // namespace dbaug
