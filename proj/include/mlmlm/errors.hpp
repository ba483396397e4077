#pragma once

#include <stdexcept>
#include <string>

namespace mlmlm {

// Malformed or inconsistent input data (files, label matrices, schemas).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A linear system or leave-one-out statistic could not be computed.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid flag combination or unsupported option.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mlmlm
