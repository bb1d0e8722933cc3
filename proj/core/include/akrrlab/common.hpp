#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace akrrlab {

inline constexpr const char* kVersion = "1.0.0";

// Thrown when a factorization or solve cannot meet its accuracy contract.
// Input/precondition violations use std::invalid_argument instead; the CLI
// maps the two to different exit codes.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Shortest decimal form that round-trips a double exactly.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace akrrlab
