#pragma once

// Finite-difference verification of every autodiff op and of the full
// semi-supervised loss through G, D and L with frozen Gumbel noise.

#include <cstdint>
#include <string>
#include <vector>

namespace s2cgan {

struct GradCheckResult {
  std::string name;  // "op/leaf" or "composite/leaf"
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

inline constexpr double kOpTolerance = 1e-5;
inline constexpr double kCompositeTolerance = 1e-4;

std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed);

}  // namespace s2cgan
