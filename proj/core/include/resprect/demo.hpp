#pragma once

#include "resprect/env.hpp"
#include "resprect/tensor.hpp"

namespace resprect {

/// Hand-written grasp controller with privileged access to the true object
/// pose: centre over the object at contact height, close until two tips
/// touch, then lift straight up.  Deterministic; always returns an action
/// inside [-1, 1]^(4+F).
Tensor scripted_demo_policy(const Observation& obs, const GraspWorld& world);

}  // namespace resprect
