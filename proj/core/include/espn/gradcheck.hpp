#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace espn::gradcheck {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

/// Estimators against closed-form gradients of synthetic objectives:
/// forward differences on a positive-definite quadratic, WSR direction on
/// the same quadratic and on a linear objective, NES slope recovery, WSR
/// affine-reward invariance and the zero-variance guard.
std::vector<CheckResult> run_all(std::uint64_t seed = 7);

}  // namespace espn::gradcheck
