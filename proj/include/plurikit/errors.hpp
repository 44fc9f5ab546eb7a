#pragma once

#include <stdexcept>
#include <string>

namespace plurikit {

/// Raised when a numerical stage cannot reach its tolerance or meets a
/// degenerate input (singular reference, non-PD Gram, SOR stall).
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Raised by the config reader; `key()` names the first offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace plurikit
