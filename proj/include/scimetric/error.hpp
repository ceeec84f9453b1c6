#pragma once

#include <stdexcept>
#include <string>

namespace scimetric {

// Input files or records that cannot be used. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical routine hit a degenerate or non-convergent case. Exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Zero-scale normalization cell or null (productivity or prestige).
class DegenerateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace scimetric
