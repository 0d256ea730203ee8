#pragma once

#include <stdexcept>
#include <string>

namespace tfimpute {

// Bad user input: malformed files, inconsistent shapes, out-of-range indices,
// or data whose missingness makes the model unidentifiable.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical stage could not produce a usable answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tfimpute
