#pragma once

#include <stdexcept>
#include <string>

namespace coi {

// Unreadable/unwritable files and malformed image data. Messages carry the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inputs that carry no usable signal, e.g. a constant image handed to registration.
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace coi
