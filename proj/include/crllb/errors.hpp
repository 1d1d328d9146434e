#pragma once

#include <stdexcept>
#include <string>

namespace crllb {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration or argument errors (bad model parameters, bad grids).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Errors that come out of the mathematics rather than the input.
class MathError : public Error {
 public:
  using Error::Error;
};

class DimMismatch : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public MathError {
 public:
  using MathError::MathError;
};

/// Raised when the FIM cannot be inverted and no closed-form limit exists.
class SingularFim : public MathError {
 public:
  using MathError::MathError;
};

class RankDeficient : public MathError {
 public:
  using MathError::MathError;
};

class NonFinite : public MathError {
 public:
  using MathError::MathError;
};

/// A density exceeded its declared maximum during rejection sampling.
class EnvelopeError : public MathError {
 public:
  using MathError::MathError;
};

class TooFewSamples : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class DegenerateN : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace crllb
