#pragma once

#include <stdexcept>
#include <string>

namespace fusilli {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions or channel counts do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An argument is outside its documented domain (negative lambda, bad radius...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input to feature extraction was not padded to the required multiple.
class PaddingContractError : public ShapeError {
 public:
  using ShapeError::ShapeError;
};

/// A file does not carry the expected magic, version or encoding.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A file ends early or its payload is inconsistent with its header.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// A weight file parses but does not describe the VGG-19 prefix.
class IncompatibleModelError : public Error {
 public:
  using Error::Error;
};

/// Filesystem level failure (missing file, unwritable path).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fusilli
