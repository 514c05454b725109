#pragma once

#include <cstdint>
#include <vector>

#include "resprect/rng.hpp"
#include "resprect/tensor.hpp"

namespace resprect {

/// One environment step as stored for off-policy learning.
///
/// `action` is the learned policy's own output (for a residual agent that is
/// the correction, not the executed sum).  `a_pre` / `a_pre_next` hold the
/// frozen base policy's action at obs / next_obs so updates can re-compose
/// the executed action and bootstrap through the composed next action; both
/// are all-zero for a plain agent.  `done` marks genuine termination only —
/// time-limit truncation sets `truncated` instead and still bootstraps.
struct Transition {
  Tensor obs;
  Tensor action;
  float reward = 0.0f;
  Tensor next_obs;
  Tensor a_pre;
  Tensor a_pre_next;
  bool done = false;
  bool truncated = false;
};

/// Fixed-capacity ring buffer with uniform-with-replacement sampling.
/// Storage grows on demand up to capacity, then the oldest entry is
/// overwritten.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed);

  void push(Transition t);
  const Transition& at(std::size_t i) const { return storage_[i]; }

  /// `batch` independent uniform draws over the current contents.
  std::vector<std::size_t> sample_indices(std::size_t batch);
  std::vector<Transition> sample(std::size_t batch);

  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> storage_;
  Rng rng_;
};

}  // namespace resprect
