#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace d3d {

// Root of every error raised by the library. The CLI maps subclasses onto
// exit codes, so keep the hierarchy flat.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Spatial size changed mid-stream and similar session misuse.
class StreamError : public Error {
 public:
  using Error::Error;
};

// Non-finite frame values, malformed user data that is not a file format.
class InputError : public Error {
 public:
  using Error::Error;
};

class InsufficientInputError : public Error {
 public:
  using Error::Error;
};

class WeightsError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// A frame stream ended in the middle of a frame.
class TruncationError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace d3d
