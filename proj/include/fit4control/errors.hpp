#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fit4control {

/// Invalid input to a library operation (bad shapes, nonpositive sizes, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to meet its contract (non-convergence,
/// arithmetic overflow, invariant violated beyond tolerance).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, std::vector<double> residuals = {})
      : std::runtime_error(what), residuals_(std::move(residuals)) {}

  const std::vector<double>& residuals() const noexcept { return residuals_; }

 private:
  std::vector<double> residuals_;
};

/// Schema violation in a JSON configuration. `pointer` is a JSON pointer to
/// the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string pointer, std::string reason)
      : std::runtime_error(pointer + ": " + reason),
        pointer_(std::move(pointer)),
        reason_(std::move(reason)) {}

  const std::string& pointer() const noexcept { return pointer_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string pointer_;
  std::string reason_;
};

}  // namespace fit4control
