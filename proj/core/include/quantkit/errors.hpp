#pragma once

#include <stdexcept>
#include <string>

namespace quantkit {

// Bad arguments, shapes, flags. CLI maps this to exit code 2.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Factorization failures, non-finite values, pivot underflow. Exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File format and filesystem problems. Exit code 4.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace quantkit
