#pragma once

#include <stdexcept>
#include <string>

namespace nmerci {

// Bad input data or a failed computation. The CLI maps this to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad flags or arguments. The CLI maps this to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

}  // namespace nmerci
