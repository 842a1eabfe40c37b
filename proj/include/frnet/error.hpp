#pragma once

#include <stdexcept>
#include <string>

namespace frnet {

/// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A transform length the radix-2 kernels cannot handle.
class UnsupportedSize : public Error {
 public:
  using Error::Error;
};

/// Bad magic, version, or structurally malformed file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// File is well-formed but its records disagree with its header or manifest.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace frnet
