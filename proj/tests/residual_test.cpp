// Tests for the residual learner: input augmentation, base-action identity,
// critic warm-start copy semantics, collect-step plumbing and update hygiene.

#include <gtest/gtest.h>

#include <cstdint>
#include <vector>

#include "resprect/env.hpp"
#include "resprect/errors.hpp"
#include "resprect/mlp.hpp"
#include "resprect/residual.hpp"
#include "resprect/rng.hpp"
#include "resprect/sac.hpp"

namespace resprect {
namespace {

SacConfig env_cfg(std::size_t hidden = 16) {
  SacConfig cfg;
  cfg.obs_dim = observation_dim(3);
  cfg.action_dim = 7;
  cfg.hidden = hidden;
  cfg.target_entropy = -7.0f;
  cfg.batch_size = 16;
  cfg.gradient_steps = 2;
  return cfg;
}

PretrainedPolicy make_base(std::uint64_t seed = 1, std::size_t hidden = 16) {
  return freeze_policy(make_agent(env_cfg(hidden), seed));
}

TaskSpec test_task(std::uint64_t seed = 0) {
  Rng rng(derive_seed(seed, "task"));
  return object_sampler("pretrain", rng);
}

bool params_equal(const ParamSet& a, const ParamSet& b) {
  if (!a.same_layout(b)) return false;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    if (a.entries[i].value.data != b.entries[i].value.data) return false;
  }
  return true;
}

// Fills the buffer by rolling the composed policy, resetting as needed.
void collect_into(ResidualAgent& agent, GraspEnv& env, ReplayBuffer& buffer,
                  std::size_t steps, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "collect"));
  std::uint64_t episode = seed;
  Observation obs = env.reset(episode, test_task(episode));
  for (std::size_t i = 0; i < steps; ++i) {
    CollectStep cs = resprect_collect_step(agent, env, obs, rng);
    buffer.push(cs.transition);
    if (cs.outcome == EpisodeOutcome::Running) {
      obs = cs.next_obs;
    } else {
      ++episode;
      obs = env.reset(episode, test_task(episode));
    }
  }
}

TEST(ResidualInputTest, ConcatenatesAndValidates) {
  Tensor s({2});
  s.data = {1.0f, 2.0f};
  Tensor a({1});
  a.data = {3.0f};
  const Tensor s_rl = residual_actor_input(s, a);
  ASSERT_EQ(s_rl.dims, (std::vector<std::size_t>{3}));
  EXPECT_EQ(s_rl.data, (std::vector<float>{1.0f, 2.0f, 3.0f}));

  // Round-trip slicing recovers both parts bit-exactly.
  EXPECT_TRUE(std::equal(s.data.begin(), s.data.end(), s_rl.data.begin()));
  EXPECT_TRUE(std::equal(a.data.begin(), a.data.end(), s_rl.data.begin() + 2));

  EXPECT_THROW(residual_actor_input(s, Tensor({0})), DimensionError);
  EXPECT_THROW(residual_actor_input(Tensor({2, 2}), a), DimensionError);
}

TEST(BaseActionTest, DeterministicTanhMeanOfFrozenActor) {
  const PretrainedPolicy base = make_base(3);
  Rng rng(derive_seed(3, "probe"));
  Tensor s({base.cfg.obs_dim});
  for (float& v : s.data) v = rng.uniform(-1.0f, 1.0f);

  const Tensor a1 = base_action(base, s);
  const Tensor a2 = base_action(base, s);
  ASSERT_EQ(a1.dims, (std::vector<std::size_t>{base.cfg.action_dim}));
  EXPECT_EQ(a1.data, a2.data);  // frozen + deterministic -> bit-identical

  // Cross-module equality with the evaluation-path op.
  Tensor row({1, s.dims[0]});
  row.data = s.data;
  const Tensor eval = deterministic_action(base.actor, row, base.cfg);
  for (std::size_t i = 0; i < a1.data.size(); ++i) {
    EXPECT_EQ(a1.data[i], eval.data[i]);
  }
  for (float v : a1.data) {
    EXPECT_GT(v, -1.0f);
    EXPECT_LT(v, 1.0f);
  }
}

TEST(BaseActionTest, ZeroHeadBaseActorYieldsZeroAction) {
  SacConfig cfg = env_cfg();
  cfg.zero_head_actor = true;
  const PretrainedPolicy base = freeze_policy(make_agent(cfg, 5));
  Tensor s({cfg.obs_dim}, 0.25f);
  for (float v : base_action(base, s).data) EXPECT_FLOAT_EQ(v, 0.0f);
}

TEST(WarmStartTest, CopiesCriticsAndTargetsBitExactly) {
  const PretrainedPolicy base = make_base(7);
  ResidualAgent agent = make_residual_agent(base, env_cfg(), 8, /*warm_start=*/true);

  EXPECT_TRUE(params_equal(agent.inner.critic1, base.critic1));
  EXPECT_TRUE(params_equal(agent.inner.critic2, base.critic2));
  EXPECT_TRUE(params_equal(agent.inner.target1, base.critic1));
  EXPECT_TRUE(params_equal(agent.inner.target2, base.critic2));

  // Value agreement on random probes, bit-exactly.
  Rng rng(derive_seed(7, "probes"));
  Tensor probe({100, base.cfg.obs_dim + base.cfg.action_dim});
  for (float& v : probe.data) v = rng.uniform(-1.0f, 1.0f);
  const Tensor q_base = mlp_forward(base.critic1, probe);
  const Tensor q_res = mlp_forward(agent.inner.critic1, probe);
  const Tensor q_tgt = mlp_forward(agent.inner.target1, probe);
  for (std::size_t i = 0; i < 100; ++i) {
    EXPECT_EQ(q_res.data[i], q_base.data[i]) << "probe " << i;
    EXPECT_EQ(q_tgt.data[i], q_base.data[i]) << "probe " << i;
  }
}

TEST(WarmStartTest, ResetsCriticAdamMoments) {
  const PretrainedPolicy base = make_base(9);
  ResidualAgent agent = make_residual_agent(base, env_cfg(), 10, /*warm_start=*/false);

  // Dirty the critic moments with a few updates, then warm-start.
  GraspEnv env{EnvConfig{}};
  ReplayBuffer buffer(1000, 11);
  collect_into(agent, env, buffer, 64, 11);
  Rng rng(derive_seed(11, "train"));
  resprect_update(agent, buffer, rng);

  bool any_nonzero = false;
  for (const auto& e : agent.inner.critic1_opt.m.entries) {
    for (float v : e.value.data) any_nonzero |= v != 0.0f;
  }
  ASSERT_TRUE(any_nonzero) << "update left no trace in Adam moments";

  warm_start_critics(base, agent.inner);
  for (const auto* opt : {&agent.inner.critic1_opt, &agent.inner.critic2_opt}) {
    EXPECT_EQ(opt->step, 0u);
    for (const auto& e : opt->m.entries) {
      for (float v : e.value.data) EXPECT_EQ(v, 0.0f);
    }
    for (const auto& e : opt->v.entries) {
      for (float v : e.value.data) EXPECT_EQ(v, 0.0f);
    }
  }
}

TEST(WarmStartTest, PlainResidualKeepsFreshCritics) {
  const PretrainedPolicy base = make_base(12);
  ResidualAgent plain = make_residual_agent(base, env_cfg(), 13, /*warm_start=*/false);

  Rng rng(derive_seed(13, "probes"));
  Tensor probe({10, base.cfg.obs_dim + base.cfg.action_dim});
  for (float& v : probe.data) v = rng.uniform(-1.0f, 1.0f);
  const Tensor q_base = mlp_forward(base.critic1, probe);
  const Tensor q_plain = mlp_forward(plain.inner.critic1, probe);
  bool any_differs = false;
  for (std::size_t i = 0; i < 10; ++i) any_differs |= q_plain.data[i] != q_base.data[i];
  EXPECT_TRUE(any_differs);
}

TEST(WarmStartTest, RejectsArchitectureMismatch) {
  const PretrainedPolicy base = make_base(1, /*hidden=*/16);
  AgentBundle wide = make_agent(
      [] {
        SacConfig c = env_cfg(32);
        c.residual = true;
        return c;
      }(),
      2);
  EXPECT_THROW(warm_start_critics(base, wide), CheckpointError);
}

TEST(MakeResidualAgentTest, ValidatesAndForcesResidualWiring) {
  const PretrainedPolicy base = make_base();

  SacConfig bad = env_cfg();
  bad.obs_dim += 1;
  EXPECT_THROW(make_residual_agent(base, bad, 1, true), ConfigError);
  bad = env_cfg();
  bad.residual_scale = 0.0f;
  EXPECT_THROW(make_residual_agent(base, bad, 1, true), ConfigError);
  bad.residual_scale = 1.5f;
  EXPECT_THROW(make_residual_agent(base, bad, 1, true), ConfigError);

  SacConfig cfg = env_cfg();
  cfg.residual = false;  // forced on regardless
  cfg.zero_head_actor = false;
  const ResidualAgent agent = make_residual_agent(base, cfg, 1, true);
  EXPECT_TRUE(agent.inner.cfg.residual);
  EXPECT_EQ(agent.inner.cfg.actor_input_dim(),
            agent.inner.cfg.obs_dim + agent.inner.cfg.action_dim);

  // Zero-initialised head: the deterministic correction starts at zero.
  Tensor s_rl({1, agent.inner.cfg.actor_input_dim()}, 0.37f);
  for (float v : deterministic_action(agent.inner.actor, s_rl, agent.inner.cfg).data) {
    EXPECT_FLOAT_EQ(v, 0.0f);
  }
}

TEST(ZeroResidualTest, DeterministicStreamsMatchBasePolicy) {
  const PretrainedPolicy base = make_base(21);
  ResidualAgent agent = make_residual_agent(base, env_cfg(), 22, true);
  Rng unused(0);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GraspEnv env_res{EnvConfig{}}, env_base{EnvConfig{}};
    const TaskSpec task = test_task(seed);
    Observation obs_res = env_res.reset(seed, task);
    Observation obs_base = env_base.reset(seed, task);

    for (int t = 0; t < 100; ++t) {
      const CollectStep cs =
          resprect_collect_step(agent, env_res, obs_res, unused, /*deterministic=*/true);
      const Tensor a_base = base_action(base, obs_base.flatten());
      const auto r_base = env_base.step(a_base);

      // The composed action collapses to the base action...
      for (std::size_t i = 0; i < a_base.data.size(); ++i) {
        ASSERT_EQ(cs.transition.a_pre.data[i], a_base.data[i]) << "seed " << seed;
      }
      // ...so both environments see identical streams.
      ASSERT_EQ(cs.next_obs.flatten().data, r_base.obs.flatten().data);
      ASSERT_EQ(cs.reward.total, r_base.reward.total);
      ASSERT_EQ(cs.outcome, r_base.outcome);
      if (cs.outcome != EpisodeOutcome::Running) break;
      obs_res = cs.next_obs;
      obs_base = r_base.obs;
    }
  }
}

TEST(CollectStepTest, StoresBaseActionsForBothEndpoints) {
  const PretrainedPolicy base = make_base(31);
  ResidualAgent agent = make_residual_agent(base, env_cfg(), 32, true);
  GraspEnv env{EnvConfig{}};
  Observation obs = env.reset(33, test_task(33));
  Rng rng(derive_seed(33, "collect"));

  for (int t = 0; t < 20; ++t) {
    const CollectStep cs = resprect_collect_step(agent, env, obs, rng);
    EXPECT_EQ(cs.transition.obs.data, obs.flatten().data);
    EXPECT_EQ(cs.transition.action.dims[0], agent.inner.cfg.action_dim);
    EXPECT_EQ(cs.transition.reward, cs.reward.total);

    // Stored base actions equal recomputation on the frozen net.
    const Tensor pre = base_action(base, cs.transition.obs);
    const Tensor pre_next = base_action(base, cs.transition.next_obs);
    EXPECT_EQ(cs.transition.a_pre.data, pre.data);
    EXPECT_EQ(cs.transition.a_pre_next.data, pre_next.data);

    EXPECT_FALSE(cs.transition.done);
    EXPECT_FALSE(cs.transition.truncated);
    obs = cs.next_obs;
  }
}

TEST(CollectStepTest, MapsTimeoutToTruncatedNotDone) {
  const PretrainedPolicy base = make_base(41);
  ResidualAgent agent = make_residual_agent(base, env_cfg(), 42, true);
  EnvConfig ecfg;
  ecfg.max_steps = 3;
  GraspEnv env(ecfg);
  Observation obs = env.reset(43, test_task(43));
  Rng rng(derive_seed(43, "collect"));

  CollectStep cs;
  for (int t = 0; t < 3; ++t) {
    cs = resprect_collect_step(agent, env, obs, rng);
    obs = cs.next_obs;
  }
  EXPECT_EQ(cs.outcome, EpisodeOutcome::Timeout);
  EXPECT_FALSE(cs.transition.done);
  EXPECT_TRUE(cs.transition.truncated);
  EXPECT_THROW(resprect_collect_step(agent, env, obs, rng), StateError);
}

TEST(LogProbTest, DensityDependsOnResidualActionOnly) {
  SacConfig cfg = env_cfg();
  cfg.residual = true;
  AgentBundle agent = make_agent(cfg, 51);

  // Silence the a_pre slice of the first layer so both inputs produce the
  // same network output; any leftover log-prob difference would have to come
  // from a (wrong) composition-clip correction term.
  Tensor& w1 = agent.actor.at("w1");
  for (std::size_t r = cfg.obs_dim; r < cfg.actor_input_dim(); ++r) {
    for (std::size_t c = 0; c < cfg.hidden; ++c) w1.at(r, c) = 0.0f;
  }

  Rng probe(derive_seed(51, "probe"));
  Tensor input1({4, cfg.actor_input_dim()});
  for (float& v : input1.data) v = probe.uniform(-1.0f, 1.0f);
  Tensor input2 = input1;
  for (std::size_t b = 0; b < 4; ++b) {
    for (std::size_t j = cfg.obs_dim; j < cfg.actor_input_dim(); ++j) {
      input2.at(b, j) = 0.9f;  // strongly clipping a_pre
    }
  }

  Rng rng1(derive_seed(52, "noise")), rng2(derive_seed(52, "noise"));
  const SquashedSample s1 = squashed_gaussian_sample(agent.actor, input1, rng1, cfg);
  const SquashedSample s2 = squashed_gaussian_sample(agent.actor, input2, rng2, cfg);
  EXPECT_EQ(s1.a.data, s2.a.data);
  EXPECT_EQ(s1.log_prob.data, s2.log_prob.data);
}

TEST(CriticTargetTest, UsesComposedNextActionAndAugmentedInput) {
  const PretrainedPolicy base = make_base(61);
  ResidualAgent res = make_residual_agent(base, env_cfg(), 62, true);
  AgentBundle& agent = res.inner;
  const SacConfig& cfg = agent.cfg;

  Rng data(derive_seed(62, "data"));
  const std::size_t B = 3;
  Tensor next_obs({B, cfg.obs_dim});
  for (float& v : next_obs.data) v = data.uniform(-1.0f, 1.0f);
  Tensor a_pre_next({B, cfg.action_dim});
  for (float& v : a_pre_next.data) v = data.uniform(-0.9f, 0.9f);
  Tensor reward({B});
  reward.data = {0.5f, -0.25f, 1.0f};
  Tensor done({B});
  done.data = {0.0f, 1.0f, 0.0f};

  Rng rng_target(derive_seed(63, "target"));
  Rng rng_manual = rng_target;  // replays the same noise draws
  const Tensor y = critic_target(agent, next_obs, a_pre_next, reward, done, rng_target);

  const Tensor s_rl = concat_cols(next_obs, a_pre_next);
  const SquashedSample s = squashed_gaussian_sample(agent.actor, s_rl, rng_manual, cfg);
  const Tensor a_total = compose_action(a_pre_next, s.a, cfg.residual_scale);
  const Tensor q1 = mlp_forward(agent.target1, concat_cols(next_obs, a_total));
  const Tensor q2 = mlp_forward(agent.target2, concat_cols(next_obs, a_total));
  for (std::size_t b = 0; b < B; ++b) {
    const float minq = std::min(q1.data[b], q2.data[b]);
    const float want =
        reward.data[b] + cfg.gamma * (1.0f - done.data[b]) *
                             (minq - agent.alpha() * s.log_prob.data[b]);
    EXPECT_NEAR(y.data[b], want, 1e-6) << "row " << b;
  }
}

TEST(UpdateTest, BasePolicyBitIdenticalAfterResidualTraining) {
  const PretrainedPolicy base = make_base(71);
  ResidualAgent agent = make_residual_agent(base, env_cfg(), 72, true);

  GraspEnv env{EnvConfig{}};
  ReplayBuffer buffer(1000, 73);
  collect_into(agent, env, buffer, 80, 73);

  Rng rng(derive_seed(73, "train"));
  for (int round = 0; round < 5; ++round) resprect_update(agent, buffer, rng);

  EXPECT_TRUE(params_equal(agent.base.actor, base.actor));
  EXPECT_TRUE(params_equal(agent.base.critic1, base.critic1));
  EXPECT_TRUE(params_equal(agent.base.critic2, base.critic2));
  EXPECT_EQ(agent.inner.update_count, 10u);  // 5 rounds x 2 gradient steps

  // The inner agent did learn something.
  EXPECT_FALSE(params_equal(agent.inner.critic1, base.critic1));
}

TEST(UpdateTest, ZeroGradientStepsIsANoOp) {
  const PretrainedPolicy base = make_base(81);
  SacConfig cfg = env_cfg();
  cfg.gradient_steps = 0;
  ResidualAgent agent = make_residual_agent(base, cfg, 82, true);

  GraspEnv env{EnvConfig{}};
  ReplayBuffer buffer(1000, 83);
  collect_into(agent, env, buffer, 40, 83);

  const ParamSet actor_before = agent.inner.actor;
  const ParamSet critic_before = agent.inner.critic1;
  const float alpha_before = agent.inner.log_alpha;
  Rng rng(derive_seed(83, "train"));
  const UpdateStats stats = resprect_update(agent, buffer, rng);

  EXPECT_EQ(stats.gradient_steps, 0u);
  EXPECT_TRUE(params_equal(agent.inner.actor, actor_before));
  EXPECT_TRUE(params_equal(agent.inner.critic1, critic_before));
  EXPECT_EQ(agent.inner.log_alpha, alpha_before);
}

}  // namespace
}  // namespace resprect
