#pragma once

#include <stdexcept>

namespace octo {

// State outside the domain of the equations of motion (|theta| >= pi/2,
// cos(phi)cos(theta) <= 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Failure set whose masked mixing matrix is not of rank 4.
class RankError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter block violates one of its invariants.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace octo
