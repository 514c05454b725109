#include "resprect/replay.hpp"

#include "resprect/errors.hpp"

namespace resprect {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t seed)
    : capacity_(capacity), rng_(seed) {
  if (capacity == 0) throw StateError("ReplayBuffer: capacity must be > 0");
}

void ReplayBuffer::push(Transition t) {
  if (storage_.size() < capacity_) {
    storage_.push_back(std::move(t));
  } else {
    storage_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch) {
  if (storage_.empty()) {
    throw StateError("ReplayBuffer: cannot sample from an empty buffer");
  }
  std::vector<std::size_t> out(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    out[i] = static_cast<std::size_t>(rng_.uniform_index(storage_.size()));
  }
  return out;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch) {
  std::vector<Transition> out;
  out.reserve(batch);
  for (std::size_t i : sample_indices(batch)) out.push_back(storage_[i]);
  return out;
}

}  // namespace resprect
