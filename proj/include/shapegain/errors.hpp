#pragma once

#include <stdexcept>
#include <string>

namespace shapegain {

// Base of every error thrown by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside its documented domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Input that cannot be processed, e.g. an all-zero constellation.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class InfiniteSnrError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class UnboundedOptimumError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Request exceeds what an algorithm supports (e.g. quadrature oracle size limit).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Bit stream length incompatible with the dummy-bit framing.
class FramingError : public Error {
 public:
  using Error::Error;
};

// File access or file-format failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace shapegain
