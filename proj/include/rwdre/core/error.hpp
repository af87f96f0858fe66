#pragma once

#include <stdexcept>
#include <string>

namespace rwdre {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A precondition on an operation's arguments does not hold.
class DomainError : public Error {
 public:
  using Error::Error;
};

class SimulationError : public Error {
 public:
  using Error::Error;
};

// Simulated region or memory budget exceeded.
class ResourceError : public SimulationError {
 public:
  using SimulationError::SimulationError;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

}  // namespace rwdre
