#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace switchsplit {

// A caller broke an API precondition (bad index, nonpositive step, shape
// mismatch). These indicate bugs in the calling code, not bad data files.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Non-finite values showed up where the algorithm requires finite state.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid experiment configuration. Carries every violation found in one
// pass so a user can fix the whole file at once.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid configuration";
    for (const auto& s : v) {
      out += "\n  ";
      out += s;
    }
    return out;
  }

  std::vector<std::string> violations_;
};

}  // namespace switchsplit
