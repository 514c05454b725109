#include "resprect/baselines.hpp"

#include <string>
#include <utility>

#include "resprect/demo.hpp"
#include "resprect/errors.hpp"

namespace resprect {

namespace {

Tensor as_row(const Tensor& v) {
  Tensor out = v;
  out.dims = {1, v.dims[0]};
  return out;
}

Tensor first_row(const Tensor& m) {
  Tensor out = m;
  out.dims = {m.dims[1]};
  return out;
}

void check_env_fit(const SacConfig& cfg, const GraspEnv& env, const char* who) {
  if (env.obs_dim() != cfg.obs_dim || env.action_dim() != cfg.action_dim) {
    throw DimensionError(std::string(who) + ": agent dims (" +
                         std::to_string(cfg.obs_dim) + ", " +
                         std::to_string(cfg.action_dim) +
                         ") do not fit the environment (" +
                         std::to_string(env.obs_dim()) + ", " +
                         std::to_string(env.action_dim()) + ")");
  }
}

/// Shared scripted-rollout loop; pushes into `replay` when non-null.
DemoStats run_demos(ReplayBuffer* replay, const EnvConfig& env_cfg,
                    const TaskProvider& tasks, std::size_t episodes,
                    std::uint64_t seed) {
  GraspEnv env(env_cfg);
  Rng task_rng(derive_seed(seed, "tasks"));
  std::uint64_t ep_state = derive_seed(seed, "episodes");
  const std::size_t action_dim = env.action_dim();

  DemoStats stats;
  stats.episodes = episodes;
  double return_sum = 0.0;
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    Observation obs = env.reset(splitmix64(ep_state), tasks(task_rng));
    float ep_return = 0.0f;
    EpisodeOutcome outcome = EpisodeOutcome::Running;
    while (outcome == EpisodeOutcome::Running) {
      const Tensor action = scripted_demo_policy(obs, env.world());
      GraspEnv::StepResult r = env.step(action);
      if (replay != nullptr) {
        Transition t;
        t.obs = obs.flatten();
        t.action = action;
        t.reward = r.reward.total;
        t.next_obs = r.obs.flatten();
        t.a_pre = Tensor({action_dim});
        t.a_pre_next = Tensor({action_dim});
        t.done = outcome_is_terminal(r.outcome);
        t.truncated = r.outcome == EpisodeOutcome::Timeout;
        replay->push(std::move(t));
        ++stats.transitions;
      }
      ep_return += r.reward.total;
      obs = r.obs;
      outcome = r.outcome;
    }
    if (outcome == EpisodeOutcome::Success) ++stats.successes;
    return_sum += ep_return;
  }
  if (episodes > 0) {
    stats.success_rate =
        static_cast<float>(stats.successes) / static_cast<float>(episodes);
    stats.mean_return = static_cast<float>(return_sum / episodes);
  }
  return stats;
}

}  // namespace

TaskProvider family_tasks(std::string family) {
  {
    Rng probe(0);
    object_sampler(family, probe);  // reject unknown families up front
  }
  return [family = std::move(family)](Rng& rng) {
    return object_sampler(family, rng);
  };
}

TaskProvider fixed_task(TaskSpec task) {
  return [task = std::move(task)](Rng&) { return task; };
}

Tensor uniform_action(std::size_t dim, Rng& rng) {
  Tensor a({dim});
  for (float& v : a.data) v = rng.uniform(-1.0f, 1.0f);
  return a;
}

CollectStep sac_collect_step(const AgentBundle& agent, GraspEnv& env,
                             const Observation& obs, Rng& rng,
                             bool deterministic) {
  const SacConfig& cfg = agent.cfg;
  if (cfg.residual) {
    throw StateError(
        "sac_collect_step: residual agents collect via resprect_collect_step");
  }
  check_env_fit(cfg, env, "sac_collect_step");

  const Tensor s = obs.flatten();
  Tensor a;
  if (deterministic) {
    a = first_row(deterministic_action(agent.actor, as_row(s), cfg));
  } else {
    a = first_row(squashed_gaussian_sample(agent.actor, as_row(s), rng, cfg).a);
  }

  GraspEnv::StepResult r = env.step(a);

  CollectStep out;
  out.next_obs = r.obs;
  out.reward = r.reward;
  out.outcome = r.outcome;
  out.transition.obs = s;
  out.transition.action = a;
  out.transition.reward = r.reward.total;
  out.transition.next_obs = r.obs.flatten();
  out.transition.a_pre = Tensor({cfg.action_dim});
  out.transition.a_pre_next = Tensor({cfg.action_dim});
  out.transition.done = outcome_is_terminal(r.outcome);
  out.transition.truncated = r.outcome == EpisodeOutcome::Timeout;
  return out;
}

CollectStep random_collect_step(GraspEnv& env, const Observation& obs, Rng& rng) {
  const std::size_t action_dim = env.action_dim();
  Tensor s = obs.flatten();
  Tensor a = uniform_action(action_dim, rng);

  GraspEnv::StepResult r = env.step(a);

  CollectStep out;
  out.next_obs = r.obs;
  out.reward = r.reward;
  out.outcome = r.outcome;
  out.transition.obs = std::move(s);
  out.transition.action = std::move(a);
  out.transition.reward = r.reward.total;
  out.transition.next_obs = r.obs.flatten();
  out.transition.a_pre = Tensor({action_dim});
  out.transition.a_pre_next = Tensor({action_dim});
  out.transition.done = outcome_is_terminal(r.outcome);
  out.transition.truncated = r.outcome == EpisodeOutcome::Timeout;
  return out;
}

DemoStats demo_prefill(ReplayBuffer& replay, const EnvConfig& env_cfg,
                       const TaskProvider& tasks, std::size_t episodes,
                       std::uint64_t seed) {
  return run_demos(&replay, env_cfg, tasks, episodes, seed);
}

DemoStats demo_rollout_stats(const EnvConfig& env_cfg, const TaskProvider& tasks,
                             std::size_t episodes, std::uint64_t seed) {
  return run_demos(nullptr, env_cfg, tasks, episodes, seed);
}

AgentBundle finetune_init(const PretrainedPolicy& base) {
  if (base.cfg.residual) {
    throw ConfigError("finetune_init: base policy must be non-residual");
  }
  AgentBundle agent = make_agent(base.cfg, 0);  // weights replaced below
  agent.actor = base.actor;
  agent.critic1 = base.critic1;
  agent.critic2 = base.critic2;
  agent.target1 = base.critic1;
  agent.target2 = base.critic2;
  return agent;
}

UpdateStats finetune_iteration(AgentBundle& agent, ReplayBuffer& replay, Rng& rng,
                               std::size_t gradient_steps) {
  agent.cfg.gradient_steps = gradient_steps;
  return sac_train_iteration(agent, replay, rng);
}

void reptile_outer_update(ParamSet& meta, const ParamSet& task, float eps) {
  if (!meta.same_layout(task)) {
    throw DimensionError("reptile_outer_update: parameter layouts differ (" +
                         meta.arch_tag + " vs " + task.arch_tag + ")");
  }
  if (eps < 0.0f || eps > 1.0f) {
    throw ConfigError("reptile_outer_update: eps must be in [0,1]");
  }
  if (eps == 0.0f) return;
  if (eps == 1.0f) {  // copy keeps the eps=1 case bit-exact
    meta = task;
    return;
  }
  for (std::size_t i = 0; i < meta.entries.size(); ++i) {
    Tensor& m = meta.entries[i].value;
    const Tensor& t = task.entries[i].value;
    for (std::size_t j = 0; j < m.data.size(); ++j) {
      m.data[j] += eps * (t.data[j] - m.data[j]);
    }
  }
}

void reptile_outer_update(PretrainedPolicy& meta, const AgentBundle& task,
                          float eps) {
  reptile_outer_update(meta.actor, task.actor, eps);
  reptile_outer_update(meta.critic1, task.critic1, eps);
  reptile_outer_update(meta.critic2, task.critic2, eps);
}

PretrainedPolicy reptile_pretrain(const SacConfig& cfg, const EnvConfig& env_cfg,
                                  const std::string& family,
                                  const ReptileParams& params,
                                  std::uint64_t seed) {
  if (cfg.residual) {
    throw ConfigError("reptile_pretrain: meta policy must be non-residual");
  }
  if (params.inner_steps < 1 || params.outer_loops < 1) {
    throw ConfigError("reptile_pretrain: inner_steps and outer_loops must be >= 1");
  }
  if (params.buffer_capacity < cfg.batch_size) {
    throw ConfigError("reptile_pretrain: buffer_capacity must cover one batch");
  }

  PretrainedPolicy meta =
      freeze_policy(make_agent(cfg, derive_seed(seed, "meta-init")));
  Rng task_rng(derive_seed(seed, "tasks"));
  std::uint64_t loop_state = derive_seed(seed, "loops");

  for (std::size_t loop = 0; loop < params.outer_loops; ++loop) {
    const std::uint64_t inner_seed = splitmix64(loop_state);
    const TaskSpec task = object_sampler(family, task_rng);

    AgentBundle agent = finetune_init(meta);
    GraspEnv env(env_cfg);
    check_env_fit(cfg, env, "reptile_pretrain");
    ReplayBuffer replay(params.buffer_capacity, derive_seed(inner_seed, "replay"));
    demo_prefill(replay, env_cfg, fixed_task(task), params.demo_episodes,
                 derive_seed(inner_seed, "demos"));

    Rng train_rng(derive_seed(inner_seed, "train"));
    std::uint64_t ep_state = derive_seed(inner_seed, "episodes");
    Observation obs = env.reset(splitmix64(ep_state), task);
    for (std::size_t t = 1; t <= params.inner_steps; ++t) {
      CollectStep step = t <= params.learning_starts
                             ? random_collect_step(env, obs, train_rng)
                             : sac_collect_step(agent, env, obs, train_rng);
      replay.push(std::move(step.transition));
      if (step.outcome == EpisodeOutcome::Running) {
        obs = std::move(step.next_obs);
      } else {
        obs = env.reset(splitmix64(ep_state), task);
      }
      if (t % cfg.training_frequency == 0 && t >= params.learning_starts &&
          replay.size() >= cfg.batch_size) {
        sac_train_iteration(agent, replay, train_rng);
      }
    }

    reptile_outer_update(meta, agent, params.eps);
  }
  return meta;
}

Tensor loaded_policy_action(const LoadedPolicy& policy, const Tensor& s) {
  if (!policy.residual) {
    return first_row(deterministic_action(policy.actor, as_row(s), policy.cfg));
  }
  const Tensor a_pre = base_action(policy.base, s);
  const Tensor s_rl = residual_actor_input(s, a_pre);
  const Tensor a_rl =
      first_row(deterministic_action(policy.actor, as_row(s_rl), policy.cfg));
  return first_row(
      compose_action(as_row(a_pre), as_row(a_rl), policy.cfg.residual_scale));
}

EvalStats evaluate_policy(
    const EnvConfig& env_cfg, const TaskProvider& tasks, std::size_t episodes,
    std::uint64_t seed, const std::function<Tensor(const Tensor&)>& policy,
    const std::function<void(std::size_t, EpisodeOutcome, float)>& on_episode) {
  if (episodes == 0) {
    throw ConfigError("evaluate_policy: need at least one episode");
  }
  GraspEnv env(env_cfg);
  Rng task_rng(derive_seed(seed, "tasks"));
  std::uint64_t ep_state = derive_seed(seed, "episodes");

  EvalStats stats;
  stats.episodes = episodes;
  double return_sum = 0.0;
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    Observation obs = env.reset(splitmix64(ep_state), tasks(task_rng));
    float ep_return = 0.0f;
    EpisodeOutcome outcome = EpisodeOutcome::Running;
    while (outcome == EpisodeOutcome::Running) {
      GraspEnv::StepResult r = env.step(policy(obs.flatten()));
      ep_return += r.reward.total;
      obs = r.obs;
      outcome = r.outcome;
    }
    if (outcome == EpisodeOutcome::Success) ++stats.successes;
    return_sum += ep_return;
    if (on_episode) on_episode(ep + 1, outcome, ep_return);
  }
  stats.success_rate =
      static_cast<float>(stats.successes) / static_cast<float>(episodes);
  stats.mean_return = static_cast<float>(return_sum / episodes);
  return stats;
}

EvalStats evaluate_pretrained(const std::string& checkpoint_path,
                              const TaskSpec& task, std::size_t episodes,
                              std::uint64_t seed) {
  const LoadedPolicy policy = load_policy_checkpoint(checkpoint_path);
  if (policy.cfg.action_dim < 6) {
    throw CheckpointError("evaluate_pretrained: checkpoint action dim " +
                          std::to_string(policy.cfg.action_dim) +
                          " does not fit the grasp environment");
  }
  EnvConfig env_cfg;
  env_cfg.fingers = policy.cfg.action_dim - 4;
  if (observation_dim(env_cfg.fingers) != policy.cfg.obs_dim) {
    throw CheckpointError(
        "evaluate_pretrained: checkpoint obs dim does not match the "
        "environment observation layout");
  }
  return evaluate_policy(env_cfg, fixed_task(task), episodes, seed,
                         [&policy](const Tensor& s) {
                           return loaded_policy_action(policy, s);
                         });
}

}  // namespace resprect
