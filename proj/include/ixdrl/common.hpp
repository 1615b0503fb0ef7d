#pragma once

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace ixdrl {

// Raised when trace data or configuration violates a schema invariant.
// Messages identify the offending trace/step/field where applicable.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a pipeline stage cannot run (missing input, I/O failure, ...).
class StageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }
inline double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

// Non-fatal diagnostics go to stderr; callers that need to test for a
// degenerate condition get a flag in the result struct instead.
inline void warn(const std::string& msg) {
  std::fprintf(stderr, "[ixdrl] warning: %s\n", msg.c_str());
}

}  // namespace ixdrl
