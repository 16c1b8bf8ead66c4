#pragma once

#include <stdexcept>
#include <string>

namespace advsal {

// Base of every error raised by the core. The C API maps each subclass to a
// status code; anything else escaping a call becomes ADVSAL_E_INTERNAL.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller-side precondition failed (class out of range, k == m, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents: bad magic, truncation, count mismatch.
class FormatError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public NumericError {
 public:
  DivergenceError(int epoch, const std::string& what)
      : NumericError(what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

}  // namespace advsal
