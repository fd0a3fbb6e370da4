#ifndef MORL_COMMON_ERROR_HPP_
#define MORL_COMMON_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace morl {

// Invalid configuration values, dimension mismatches, unknown keys.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API misuse, e.g. backward without a matching forward.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Non-finite values reached a place where they must not be.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace morl

#endif  // MORL_COMMON_ERROR_HPP_
