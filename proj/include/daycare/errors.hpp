#pragma once

#include <stdexcept>
#include <string>

namespace daycare {

// Error taxonomy shared by every module. Each maps onto one CLI exit class.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LifecycleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PersistenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace daycare
