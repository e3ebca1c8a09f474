#pragma once

#include <stdexcept>
#include <string>

namespace netinf {

// Exception hierarchy. The CLI maps these onto exit codes:
// IoError -> 1, ParameterError/UsageError/GenerationError/InsufficientDataError -> 2,
// NumericalError -> 3.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A domain value outside its admissible range (e.g. beta not in (0,1)).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A call whose arguments are inconsistent with each other.
class UsageError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace netinf
