#pragma once

#include <stdexcept>
#include <string>

namespace mtmm {

/// Shape or dimension violation (mismatched operands, bad config sizes).
class ShapeError : public std::invalid_argument {
 public:
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

/// Numeric breakdown: NaN/Inf where a finite value is required.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Dataset, checkpoint or config file validation failure.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mtmm
