#pragma once

#include <stdexcept>
#include <string>

namespace liftbreg {

/// Value outside the admissible label range or disparity interval.
class RangeError : public std::out_of_range {
 public:
  explicit RangeError(const std::string& what) : std::out_of_range(what) {}
};

/// Malformed data-term piece model or label set.
class ModelError : public std::invalid_argument {
 public:
  explicit ModelError(const std::string& what) : std::invalid_argument(what) {}
};

/// Non-finite iterate or failed inner solve.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Inconsistent user input (shapes, files, configuration).
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Lifted Bregman run stopped because too many pixels left the
/// sublabel-integral set.
class BregmanAbort : public NumericError {
 public:
  BregmanAbort(const std::string& what, int step_, double fraction_)
      : NumericError(what), step(step_), fraction(fraction_) {}
  int step;
  double fraction;
};

}  // namespace liftbreg
