#pragma once

#include <stdexcept>
#include <string>

namespace dynperc {

/// Invalid user-supplied configuration. The message names the offending
/// parameter first so the CLI can emit a single-line diagnostic. Exit code 1.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& parameter, const std::string& why)
      : std::runtime_error(parameter + ": " + why), parameter_(parameter) {}

  const std::string& parameter() const noexcept { return parameter_; }

 private:
  std::string parameter_;
};

/// Instance outside the exact solver's supported range (d=1, 3 <= n <= 5).
class UnsupportedInstanceError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Broken internal invariant (event-queue corruption, lazy query of an
/// untracked edge, ...). Never a user error. Exit code 3.
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace dynperc
