#pragma once

#include <stdexcept>
#include <string>

namespace pcnflow {

// Invalid configuration: bad formats, dimension mismatches, unknown layer kinds.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Corrupted or inconsistent runtime data: bad indices, negative distances.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Simulation exceeded its cycle budget without draining all events.
struct DeadlockError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pcnflow
