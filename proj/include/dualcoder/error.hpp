#pragma once

#include <stdexcept>
#include <string>

namespace dualcoder {

// Base class for all errors thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or unsupported input data (bad WAV codec, bad magic, ...).
struct FormatError : Error {
  using Error::Error;
};

// Text input that fails to parse; carries a 1-based line number when known.
struct ParseError : Error {
  ParseError(const std::string& msg, long line)
      : Error(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
        line_number(line) {}
  explicit ParseError(const std::string& msg) : ParseError(msg, 0) {}
  long line_number = 0;
};

// Tensor/vector dimensions that do not agree.
struct ShapeError : Error {
  using Error::Error;
};

// Invalid argument values (empty input, out-of-range label, ...).
struct ValueError : Error {
  using Error::Error;
};

// Operation invoked in the wrong order (e.g. backward before forward).
struct StateError : Error {
  using Error::Error;
};

// Filesystem problems.
struct IoError : Error {
  using Error::Error;
};

// Training aborted (non-finite loss and similar).
struct TrainError : Error {
  using Error::Error;
};

}  // namespace dualcoder
