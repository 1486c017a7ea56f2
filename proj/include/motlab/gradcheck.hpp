#pragma once

#include <cstdint>
#include <string>

namespace motlab {

struct GradCheckOptions {
  int num_instances = 20;
  int max_dim = 8;
  int max_tokens = 5;
  int max_experts = 4;
  int max_samples = 16;
  double step = 1e-5;
  double rel_tol = 1e-5;
  double abs_floor = 1e-9;
};

struct GradCheckResult {
  int instances = 0;
  long entries = 0;
  long failures = 0;
  /// Largest |analytic - numeric| / max(|analytic|, |numeric|, floor). An
  /// entry fails when both this and the absolute error exceed their limits.
  double max_rel_err = 0.0;
  std::string worst;  // which block and instance produced max_rel_err

  bool passed() const { return failures == 0; }
};

/// Compares grad_theta, grad_w and grad_wkq against central differences on
/// random small instances with routes frozen.
GradCheckResult run_gradient_check(std::uint64_t seed, const GradCheckOptions& options = {});

}  // namespace motlab
