#pragma once

#include <stdexcept>
#include <string>

namespace bpre {

// Invalid distribution or configuration parameters.
class parameter_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent input files.
class parse_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Estimation cannot proceed on the given data (e.g. subcritical sample mean).
class estimation_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A 64-bit population counter would wrap.
class count_overflow_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bpre
