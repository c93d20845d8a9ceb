#pragma once

#include <stdexcept>
#include <string>

namespace attrib {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed files, unknown names, invalid parameters.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace attrib
