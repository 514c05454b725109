#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "resprect/checkpoint.hpp"
#include "resprect/env.hpp"
#include "resprect/replay.hpp"
#include "resprect/residual.hpp"
#include "resprect/sac.hpp"

namespace resprect {

/// Supplies the task for each new episode.  A family provider resamples per
/// episode (the pretraining distribution); a fixed provider always returns
/// the same spec (one target object).
using TaskProvider = std::function<TaskSpec(Rng&)>;

TaskProvider family_tasks(std::string family);
TaskProvider fixed_task(TaskSpec task);

/// A uniform random action in [-1,1]^dim (warm-up exploration).
Tensor uniform_action(std::size_t dim, Rng& rng);

/// One environment step of a plain (non-residual) agent: the sampled action
/// is executed as-is and the base-action slots in the transition stay zero.
CollectStep sac_collect_step(const AgentBundle& agent, GraspEnv& env,
                             const Observation& obs, Rng& rng,
                             bool deterministic = false);

/// Warm-up variant of sac_collect_step with a uniform random action.
CollectStep random_collect_step(GraspEnv& env, const Observation& obs, Rng& rng);

struct DemoStats {
  std::size_t episodes = 0;
  std::size_t successes = 0;
  std::size_t transitions = 0;
  float success_rate = 0.0f;
  float mean_return = 0.0f;
};

/// Runs the scripted controller for `episodes` episodes and pushes every
/// transition into `replay` (base-action slots zeroed, ready for plain SAC).
DemoStats demo_prefill(ReplayBuffer& replay, const EnvConfig& env_cfg,
                       const TaskProvider& tasks, std::size_t episodes,
                       std::uint64_t seed);

/// Same rollouts without storing anything — measures the scripted
/// controller's own success rate (the flat demonstrations curve).
DemoStats demo_rollout_stats(const EnvConfig& env_cfg, const TaskProvider& tasks,
                             std::size_t episodes, std::uint64_t seed);

/// A fresh agent whose actor, critics and targets start as bit-exact copies
/// of the base policy; optimizer moments and the entropy coefficient restart
/// from scratch.
AgentBundle finetune_init(const PretrainedPolicy& base);

/// One training round with an explicit gradient-step count (the fine-tuning
/// baseline uses 1 by default where scratch training uses 10).
UpdateStats finetune_iteration(AgentBundle& agent, ReplayBuffer& replay, Rng& rng,
                               std::size_t gradient_steps = 1);

/// theta_meta += eps * (theta_task - theta_meta), elementwise.  eps = 0
/// leaves meta untouched and eps = 1 copies the task weights bit-exactly.
void reptile_outer_update(ParamSet& meta, const ParamSet& task, float eps);

/// Applies the outer update to actor and both critics of the meta policy.
void reptile_outer_update(PretrainedPolicy& meta, const AgentBundle& task,
                          float eps);

struct ReptileParams {
  std::size_t inner_steps = 1000;   ///< env steps per inner run
  std::size_t outer_loops = 10;     ///< task samples / meta updates
  float eps = 0.1f;                 ///< outer interpolation step
  std::size_t demo_episodes = 50;   ///< scripted prefill per inner buffer
  std::size_t learning_starts = 100;
  std::size_t buffer_capacity = 1000000;
};

/// First-order meta pretraining: per outer loop, sample a task from `family`,
/// clone the meta weights into a fresh agent, run `inner_steps` of SAC on a
/// demo-prefilled buffer, then pull the meta weights toward the result.
PretrainedPolicy reptile_pretrain(const SacConfig& cfg, const EnvConfig& env_cfg,
                                  const std::string& family,
                                  const ReptileParams& params,
                                  std::uint64_t seed);

struct EvalStats {
  std::size_t episodes = 0;
  std::size_t successes = 0;
  float success_rate = 0.0f;
  float mean_return = 0.0f;
};

/// Deterministic composed action of a loaded checkpoint (base + correction
/// for residual policies, plain tanh-mean otherwise).
Tensor loaded_policy_action(const LoadedPolicy& policy, const Tensor& s);

/// Deterministic rollouts of an arbitrary policy function on seeded episodes.
/// `on_episode(ep, outcome, return)` fires after each episode when provided.
EvalStats evaluate_policy(
    const EnvConfig& env_cfg, const TaskProvider& tasks, std::size_t episodes,
    std::uint64_t seed, const std::function<Tensor(const Tensor&)>& policy,
    const std::function<void(std::size_t, EpisodeOutcome, float)>& on_episode =
        {});

/// Success rate of a checkpointed policy over `episodes` seeded episodes on
/// one task (the flat pre-trained curve).  episodes = 0 is a config error.
EvalStats evaluate_pretrained(const std::string& checkpoint_path,
                              const TaskSpec& task, std::size_t episodes = 100,
                              std::uint64_t seed = 0);

}  // namespace resprect
