#pragma once

#include <stdexcept>
#include <string>

namespace scsampler {

// Exit-code classes used by the command-line front end: 1 config, 2 data, 3 numeric.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace scsampler
