#pragma once

#include <stdexcept>

namespace putl {

// Malformed or inconsistent input: bad files, violated dataset invariants,
// impossible sampling requests.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An optimizer or likelihood could not produce a usable answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace putl
