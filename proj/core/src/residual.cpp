#include "resprect/residual.hpp"

#include <string>

#include "resprect/errors.hpp"

namespace resprect {

namespace {

/// Lifts a rank-1 vector to a single-row batch.
Tensor as_row(const Tensor& v) {
  Tensor row({1, v.dims[0]});
  row.data = v.data;
  return row;
}

Tensor first_row(const Tensor& batch) {
  Tensor v({batch.dims[1]});
  v.data.assign(batch.data.begin(), batch.data.begin() + batch.dims[1]);
  return v;
}

}  // namespace

PretrainedPolicy freeze_policy(const AgentBundle& agent) {
  PretrainedPolicy base;
  base.cfg = agent.cfg;
  base.actor = agent.actor;
  base.critic1 = agent.critic1;
  base.critic2 = agent.critic2;
  return base;
}

Tensor residual_actor_input(const Tensor& s, const Tensor& a_pre) {
  if (s.dims.size() != 1 || a_pre.dims.size() != 1) {
    throw DimensionError("residual_actor_input: want rank-1 vectors, got " +
                         s.shape_str() + " and " + a_pre.shape_str());
  }
  if (s.dims[0] == 0 || a_pre.dims[0] == 0) {
    throw DimensionError("residual_actor_input: empty input");
  }
  Tensor out({s.dims[0] + a_pre.dims[0]});
  std::copy(s.data.begin(), s.data.end(), out.data.begin());
  std::copy(a_pre.data.begin(), a_pre.data.end(), out.data.begin() + s.dims[0]);
  return out;
}

Tensor base_action(const PretrainedPolicy& base, const Tensor& s) {
  if (s.dims.size() == 1) {
    return first_row(deterministic_action(base.actor, as_row(s), base.cfg));
  }
  return deterministic_action(base.actor, s, base.cfg);
}

void warm_start_critics(const PretrainedPolicy& base, AgentBundle& agent) {
  if (!base.critic1.same_layout(agent.critic1) ||
      !base.critic2.same_layout(agent.critic2)) {
    throw CheckpointError(
        "warm_start_critics: base critics (" + base.critic1.arch_tag +
        ") are incompatible with the agent's (" + agent.critic1.arch_tag + ")");
  }
  agent.critic1 = base.critic1;
  agent.critic2 = base.critic2;
  agent.target1 = base.critic1;
  agent.target2 = base.critic2;
  agent.critic1_opt.reset_moments();
  agent.critic2_opt.reset_moments();
}

ResidualAgent make_residual_agent(const PretrainedPolicy& base, SacConfig cfg,
                                  std::uint64_t seed, bool warm_start) {
  if (cfg.obs_dim != base.cfg.obs_dim || cfg.action_dim != base.cfg.action_dim) {
    throw ConfigError("make_residual_agent: dims (" + std::to_string(cfg.obs_dim) +
                      ", " + std::to_string(cfg.action_dim) +
                      ") do not match the base policy (" +
                      std::to_string(base.cfg.obs_dim) + ", " +
                      std::to_string(base.cfg.action_dim) + ")");
  }
  if (!(cfg.residual_scale > 0.0f) || cfg.residual_scale > 1.0f) {
    throw ConfigError("make_residual_agent: residual_scale must be in (0,1], got " +
                      std::to_string(cfg.residual_scale));
  }
  cfg.residual = true;
  cfg.zero_head_actor = true;

  ResidualAgent agent;
  agent.inner = make_agent(cfg, seed);
  agent.base = base;
  if (warm_start) warm_start_critics(agent.base, agent.inner);
  return agent;
}

namespace {

void check_env_dims(const SacConfig& cfg, const GraspEnv& env, const Tensor& s) {
  if (s.dims[0] != cfg.obs_dim || env.action_dim() != cfg.action_dim) {
    throw DimensionError("resprect_collect_step: agent dims (" +
                         std::to_string(cfg.obs_dim) + ", " +
                         std::to_string(cfg.action_dim) +
                         ") do not fit the environment (" +
                         std::to_string(env.obs_dim()) + ", " +
                         std::to_string(env.action_dim()) + ")");
  }
}

/// Executes clip(a_pre + scale * a_rl) and packages the transition.
CollectStep execute_residual_action(const ResidualAgent& agent, GraspEnv& env,
                                    Tensor s, Tensor a_pre, Tensor a_rl) {
  const float scale = agent.inner.cfg.residual_scale;
  const Tensor a_total =
      first_row(compose_action(as_row(a_pre), as_row(a_rl), scale));

  GraspEnv::StepResult r = env.step(a_total);

  CollectStep out;
  out.next_obs = r.obs;
  out.reward = r.reward;
  out.outcome = r.outcome;
  out.transition.obs = std::move(s);
  out.transition.action = std::move(a_rl);
  out.transition.reward = r.reward.total;
  out.transition.next_obs = r.obs.flatten();
  out.transition.a_pre = std::move(a_pre);
  out.transition.a_pre_next = base_action(agent.base, out.transition.next_obs);
  out.transition.done = outcome_is_terminal(r.outcome);
  out.transition.truncated = r.outcome == EpisodeOutcome::Timeout;
  return out;
}

}  // namespace

CollectStep resprect_collect_step(const ResidualAgent& agent, GraspEnv& env,
                                  const Observation& obs, Rng& rng,
                                  bool deterministic) {
  const SacConfig& cfg = agent.inner.cfg;
  Tensor s = obs.flatten();
  check_env_dims(cfg, env, s);

  Tensor a_pre = base_action(agent.base, s);
  const Tensor s_rl = residual_actor_input(s, a_pre);

  Tensor a_rl;
  if (deterministic) {
    a_rl = first_row(deterministic_action(agent.inner.actor, as_row(s_rl), cfg));
  } else {
    a_rl = first_row(
        squashed_gaussian_sample(agent.inner.actor, as_row(s_rl), rng, cfg).a);
  }
  return execute_residual_action(agent, env, std::move(s), std::move(a_pre),
                                 std::move(a_rl));
}

CollectStep resprect_collect_random(const ResidualAgent& agent, GraspEnv& env,
                                    const Observation& obs, Rng& rng) {
  const SacConfig& cfg = agent.inner.cfg;
  Tensor s = obs.flatten();
  check_env_dims(cfg, env, s);

  Tensor a_pre = base_action(agent.base, s);
  Tensor a_rl({cfg.action_dim});
  for (float& v : a_rl.data) v = rng.uniform(-1.0f, 1.0f);
  return execute_residual_action(agent, env, std::move(s), std::move(a_pre),
                                 std::move(a_rl));
}

UpdateStats resprect_update(ResidualAgent& agent, ReplayBuffer& replay, Rng& rng) {
  return sac_train_iteration(agent.inner, replay, rng);
}

}  // namespace resprect
