#pragma once

#include <stdexcept>
#include <string>

namespace spinloop {

// CLI exit codes: config errors -> 2, numerical failures -> 3, fit failures -> 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace spinloop
