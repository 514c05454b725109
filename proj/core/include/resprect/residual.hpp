#pragma once

#include <cstdint>

#include "resprect/env.hpp"
#include "resprect/replay.hpp"
#include "resprect/sac.hpp"

namespace resprect {

/// A frozen snapshot of a trained agent: the actor supplies the base action,
/// the critics seed the residual learner's value functions.  Treat as
/// read-only after construction.
struct PretrainedPolicy {
  SacConfig cfg;  // config the policy was trained with (non-residual)
  ParamSet actor;
  ParamSet critic1, critic2;
};

/// Snapshots the learnable parts of an agent into a frozen policy.
PretrainedPolicy freeze_policy(const AgentBundle& agent);

/// [s ‖ a_pre]: the augmented input the residual actor conditions on.
Tensor residual_actor_input(const Tensor& s, const Tensor& a_pre);

/// Deterministic tanh-mean action of the frozen base actor; accepts a single
/// observation [obs] or a batch [B, obs].
Tensor base_action(const PretrainedPolicy& base, const Tensor& s);

/// Residual learner: a fresh SAC agent whose actor sees [s ‖ a_pre] and whose
/// action is a correction added onto the frozen base policy's output.
struct ResidualAgent {
  AgentBundle inner;
  PretrainedPolicy base;
};

/// Builds a residual agent around `base`.  cfg.obs_dim/action_dim must match
/// the base; cfg.residual and the zero actor head are forced on so the
/// correction starts at exactly zero.  With `warm_start`, the inner critics
/// and their targets are copied bit-exactly from the base critics (the plain
/// ablation keeps the fresh random critics instead).
ResidualAgent make_residual_agent(const PretrainedPolicy& base, SacConfig cfg,
                                  std::uint64_t seed, bool warm_start);

/// Copies base critic weights into the agent's critics *and* targets and
/// zeroes the critic Adam moments.  Legal whenever both score (s, executed
/// action) with the same architecture; throws CheckpointError otherwise.
void warm_start_critics(const PretrainedPolicy& base, AgentBundle& agent);

struct CollectStep {
  Transition transition;  // action = the residual correction a_rl
  Observation next_obs;
  RewardComponents reward;
  EpisodeOutcome outcome = EpisodeOutcome::Running;
};

/// One environment step of the composed policy: a_pre from the frozen base,
/// a_rl sampled from the residual actor on [s ‖ a_pre] (tanh-mean when
/// `deterministic`), executed action clip(a_pre + scale * a_rl).  Stores the
/// base action for both endpoints in the transition.
CollectStep resprect_collect_step(const ResidualAgent& agent, GraspEnv& env,
                                  const Observation& obs, Rng& rng,
                                  bool deterministic = false);

/// Warm-up variant of resprect_collect_step: the correction is drawn
/// uniformly from [-1,1]^A instead of the (untrained) residual actor.
CollectStep resprect_collect_random(const ResidualAgent& agent, GraspEnv& env,
                                    const Observation& obs, Rng& rng);

/// One training round of the inner agent (identical to the plain SAC round;
/// the residual wiring lives in the config and the stored base actions).
UpdateStats resprect_update(ResidualAgent& agent, ReplayBuffer& replay, Rng& rng);

}  // namespace resprect
