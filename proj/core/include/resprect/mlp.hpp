#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "resprect/rng.hpp"
#include "resprect/tensor.hpp"

namespace resprect {

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// Ordered collection of named parameters.  Order is part of the contract:
/// optimizers, Reptile interpolation and checkpoints all walk entries in
/// sequence, so two ParamSets are compatible iff names, order and shapes
/// match.  `arch_tag` is a human-readable architecture stamp used to reject
/// incompatible checkpoints early.
struct ParamSet {
  std::string arch_tag;
  std::vector<NamedTensor> entries;

  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;
  bool has(std::string_view name) const;
  /// Total number of scalar parameters.
  std::size_t total_size() const;
  /// True if names, order and shapes all match.
  bool same_layout(const ParamSet& other) const;
  /// New ParamSet with identical layout and all values zero.
  ParamSet zeros_like() const;
};

/// Fixed 2-hidden-layer ReLU MLP.  Weights are stored input-major
/// ([fan_in, fan_out]) so the forward pass is x @ W + b.  Parameter names
/// are w1,b1,w2,b2,w3,b3.
struct MlpDims {
  std::size_t in = 0;
  std::size_t hidden = 0;
  std::size_t out = 0;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init for weights and biases.
/// With zero_head the output layer (w3,b3) starts at exactly zero, so the
/// network is the constant-zero function until trained.
ParamSet mlp_init(MlpDims dims, Rng& rng, bool zero_head = false);

/// Canonical architecture tag ("mlp(in=..,hidden=..,out=..)"); equality of
/// tags is what layout-compatibility checks compare.
std::string mlp_arch_tag(MlpDims dims);

/// Reads dims back from parameter shapes; throws DimensionError if the set
/// does not look like one of our MLPs.
MlpDims mlp_dims(const ParamSet& params);

/// Activations retained by mlp_forward for the backward pass.  A ReLU
/// output is enough to recover the gradient mask (h > 0 iff pre > 0).
struct MlpTrace {
  Tensor input;
  Tensor h1;
  Tensor h2;
  bool valid = false;
};

/// input: [batch, in] -> [batch, out].  Pass a trace to enable
/// mlp_backward on the same (params, input) pair.
Tensor mlp_forward(const ParamSet& params, const Tensor& input,
                   MlpTrace* trace = nullptr);

struct MlpGrads {
  ParamSet params;  // same layout as the forward ParamSet
  Tensor input;     // [batch, in]
};

/// upstream: dLoss/dOutput, [batch, out].  Returns gradients for every
/// parameter and for the input batch.
MlpGrads mlp_backward(const ParamSet& params, const MlpTrace& trace,
                      const Tensor& upstream);

/// Input gradient only — used when a network is differentiated through as a
/// fixed function (the actor's path through the critics).  Skips the three
/// parameter-gradient matmuls of the full backward pass.
Tensor mlp_input_grad(const ParamSet& params, const MlpTrace& trace,
                      const Tensor& upstream);

}  // namespace resprect
