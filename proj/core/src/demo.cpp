#include "resprect/demo.hpp"

#include <algorithm>
#include <cmath>

namespace resprect {

namespace {

float clamp1(float v) { return std::min(std::max(v, -1.0f), 1.0f); }

// Approach altitude just above the contact range so open tips glide over the
// object instead of shoving it.
constexpr float kCruiseHeight = kContactZRange + 0.3f;

}  // namespace

Tensor scripted_demo_policy(const Observation& /*obs*/, const GraspWorld& world) {
  Tensor action({4 + world.cfg.fingers}, 0.0f);

  int touching = 0;
  for (bool c : world.contacts) touching += c ? 1 : 0;

  if (world.grasped && touching >= 2) {
    // Hold the closure and go straight up.
    action.data[2] = 1.0f;
    return action;
  }

  const float dx = world.ox - world.x;
  const float dy = world.oy - world.y;
  const float dist = std::sqrt(dx * dx + dy * dy);

  if (dist > 0.3f) {
    // Centre over the object at cruise height, tips open.
    action.data[0] = clamp1(dx / kCapTranslation);
    action.data[1] = clamp1(dy / kCapTranslation);
    action.data[2] = clamp1((kCruiseHeight - world.z) / kCapTranslation);
    for (std::size_t i = 0; i < world.cfg.fingers; ++i) {
      action.data[4 + i] = -1.0f;
    }
  } else {
    // Centred: descend onto the object, then close once the tips are within
    // reach; the environment stops each tip on the rim.
    action.data[2] = clamp1((kStartHeight - world.z) / kCapTranslation);
    if (world.z - world.oz <= kContactZRange) {
      for (std::size_t i = 0; i < world.cfg.fingers; ++i) {
        action.data[4 + i] = 1.0f;
      }
    }
  }
  return action;
}

}  // namespace resprect
