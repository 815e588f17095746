#pragma once

#include <stdexcept>
#include <string>

namespace regionblend {

// Exit-code contract: 0 success, 2 config error, 3 numerical failure.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised on NaN/Inf latents; carries the name of the failing step.
struct NumericError : std::runtime_error {
  std::string step;
  NumericError(const std::string& step_, const std::string& msg)
      : std::runtime_error("numerical failure at " + step_ + ": " + msg), step(step_) {}
};

}  // namespace regionblend
