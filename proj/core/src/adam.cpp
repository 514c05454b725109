#include "resprect/adam.hpp"

#include <cmath>

#include "resprect/errors.hpp"

namespace resprect {

void AdamState::reset_moments() {
  for (auto& e : m.entries) fill(e.value, 0.0f);
  for (auto& e : v.entries) fill(e.value, 0.0f);
  step = 0;
  beta1_pow = 1.0;
  beta2_pow = 1.0;
}

AdamState adam_init(const ParamSet& params, AdamConfig cfg) {
  AdamState s;
  s.cfg = cfg;
  s.m = params.zeros_like();
  s.v = params.zeros_like();
  return s;
}

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state) {
  if (!params.same_layout(grads) || !params.same_layout(state.m)) {
    throw DimensionError("adam_step: params/grads/state layouts disagree");
  }
  state.step += 1;
  state.beta1_pow *= state.cfg.beta1;
  state.beta2_pow *= state.cfg.beta2;
  const float bc1 = static_cast<float>(1.0 - state.beta1_pow);
  const float bc2 = static_cast<float>(1.0 - state.beta2_pow);
  const float b1 = state.cfg.beta1, b2 = state.cfg.beta2;
  const float lr = state.cfg.lr, eps = state.cfg.eps;

  for (std::size_t e = 0; e < params.entries.size(); ++e) {
    float* p = params.entries[e].value.data.data();
    const float* g = grads.entries[e].value.data.data();
    float* m = state.m.entries[e].value.data.data();
    float* v = state.v.entries[e].value.data.data();
    const std::size_t n = params.entries[e].value.size();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + (1.0f - b1) * g[i];
      v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
      const float mhat = m[i] / bc1;
      const float vhat = v[i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

void ScalarAdamState::reset_moments() {
  m = 0.0f;
  v = 0.0f;
  step = 0;
  beta1_pow = 1.0;
  beta2_pow = 1.0;
}

void adam_step_scalar(float& param, float grad, ScalarAdamState& state) {
  state.step += 1;
  state.beta1_pow *= state.cfg.beta1;
  state.beta2_pow *= state.cfg.beta2;
  const float bc1 = static_cast<float>(1.0 - state.beta1_pow);
  const float bc2 = static_cast<float>(1.0 - state.beta2_pow);
  state.m = state.cfg.beta1 * state.m + (1.0f - state.cfg.beta1) * grad;
  state.v = state.cfg.beta2 * state.v + (1.0f - state.cfg.beta2) * grad * grad;
  const float mhat = state.m / bc1;
  const float vhat = state.v / bc2;
  param -= state.cfg.lr * mhat / (std::sqrt(vhat) + state.cfg.eps);
}

}  // namespace resprect
