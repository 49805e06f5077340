#pragma once

#include <stdexcept>
#include <string>

namespace zstack {

// Base for every domain failure raised by the library. The CLI maps these to
// exit code 1; anything else escaping is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class NoPeak : public Error {
 public:
  using Error::Error;
};

class InvalidPeak : public Error {
 public:
  using Error::Error;
};

class EmptyCoverage : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace zstack
