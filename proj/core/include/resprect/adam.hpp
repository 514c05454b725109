#pragma once

#include <cstdint>

#include "resprect/mlp.hpp"

namespace resprect {

struct AdamConfig {
  float lr = 3e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

/// Per-ParamSet Adam state.  Moment tensors mirror the parameter layout.
/// Bias-correction powers are accumulated multiplicatively (no pow calls)
/// so the update sequence is exactly reproducible.
struct AdamState {
  AdamConfig cfg;
  ParamSet m;
  ParamSet v;
  std::uint64_t step = 0;
  double beta1_pow = 1.0;
  double beta2_pow = 1.0;

  /// Zeroes both moments and rewinds the step counter; used when an
  /// optimizer is re-attached to warm-started parameters.
  void reset_moments();
};

AdamState adam_init(const ParamSet& params, AdamConfig cfg = {});

/// One in-place Adam update.  grads must share the params layout.
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state);

/// Scalar Adam for single learned values (the entropy coefficient's log).
struct ScalarAdamState {
  AdamConfig cfg;
  float m = 0.0f;
  float v = 0.0f;
  std::uint64_t step = 0;
  double beta1_pow = 1.0;
  double beta2_pow = 1.0;

  void reset_moments();
};

void adam_step_scalar(float& param, float grad, ScalarAdamState& state);

}  // namespace resprect
