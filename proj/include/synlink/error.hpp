#pragma once

#include <stdexcept>
#include <string>

namespace synlink {

// Base for every error the library raises. Absence (OOV words, skipped
// synsets) is a value, never an exception.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input file could not be opened or does not follow its format.
class FormatError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Least-squares system is rank deficient (too few or degenerate pairs).
class SingularSystemError : public Error {
 public:
  using Error::Error;
};

// Iterative solver blew up; the message names the learning rate.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace synlink
