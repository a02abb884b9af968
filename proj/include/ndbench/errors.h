#pragma once

#include <stdexcept>
#include <string>

namespace ndbench {

/// Input violates a documented precondition: malformed file, unknown id,
/// out-of-range argument. Maps to process exit code 2 in the CLI.
struct input_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A computed result violates a documented invariant. Maps to process exit
/// code 3 in the CLI.
struct invariant_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ndbench
