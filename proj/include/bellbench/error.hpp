#pragma once

#include <stdexcept>
#include <string>

namespace bell {

// Raised for out-of-range or non-finite inputs to any model or analysis.
class InvalidParameter : public std::invalid_argument {
 public:
  explicit InvalidParameter(const std::string& what) : std::invalid_argument(what) {}
};

// Raised for malformed files and configuration.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bell

namespace bell {

// Raised when a statistic is not defined for the given data.
class UndefinedEstimate : public std::domain_error {
 public:
  explicit UndefinedEstimate(const std::string& what) : std::domain_error(what) {}
};

}  // namespace bell
