#pragma once

#include <stdexcept>
#include <string>

namespace bioqa {

// Base class for all library errors. CLI maps subclasses to exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MalformedInput : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct ShapeMismatch : Error {
  using Error::Error;
};

struct ConfigMismatch : Error {
  using Error::Error;
};

struct EmptyDataset : Error {
  using Error::Error;
};

struct EmptyWord : Error {
  using Error::Error;
};

struct EmptyEnsemble : Error {
  using Error::Error;
};

struct NoExtractableAnswer : Error {
  using Error::Error;
};

struct NoListQuestions : Error {
  using Error::Error;
};

struct TooFewQuestions : Error {
  using Error::Error;
};

struct NonFiniteGradient : Error {
  using Error::Error;
};

struct DivergedLoss : Error {
  using Error::Error;
};

struct StaleActivations : Error {
  using Error::Error;
};

struct ChecksumError : Error {
  using Error::Error;
};

}  // namespace bioqa
