#pragma once
#include <stdexcept>
#include <string>

namespace rgheston {

// Invalid user-facing configuration (missing integral for an Asian payoff,
// unknown config keys, OneStep coupling with a path-dependent payoff, ...).
class ConfigError : public std::invalid_argument {
public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// A scheme was asked to run outside its domain of definition, e.g. the
// Ninomiya-Victoir step with sigma^2 > 4a.
class AdmissibilityError : public std::domain_error {
public:
  explicit AdmissibilityError(const std::string& what) : std::domain_error(what) {}
};

class NumericFailure : public std::runtime_error {
public:
  explicit NumericFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rgheston
