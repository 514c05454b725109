// Comparison-method plumbing: scripted-demo prefill, fine-tuning
// initialization, Reptile meta updates and checkpoint evaluation.
#include "resprect/baselines.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "resprect/checkpoint.hpp"
#include "resprect/errors.hpp"
#include "resprect/mlp.hpp"

namespace resprect {
namespace {

SacConfig small_cfg() {
  SacConfig cfg;
  cfg.obs_dim = observation_dim(3);
  cfg.action_dim = 7;
  cfg.hidden = 12;
  cfg.batch_size = 8;
  cfg.gradient_steps = 2;
  cfg.target_entropy = -7.0f;
  return cfg;
}

EnvConfig small_env() {
  EnvConfig cfg;
  cfg.fingers = 3;
  cfg.max_steps = 40;
  return cfg;
}

bool params_equal(const ParamSet& a, const ParamSet& b) {
  if (!a.same_layout(b)) return false;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    if (a.entries[i].value.data != b.entries[i].value.data) return false;
  }
  return true;
}

// mlp_init wants an Rng lvalue; wrap it for one-shot seeded layouts.
ParamSet make_params(const MlpDims& dims, std::uint64_t seed) {
  Rng rng(seed);
  return mlp_init(dims, rng);
}

bool all_zero(const ParamSet& p) {
  for (const NamedTensor& t : p.entries) {
    for (float v : t.value.data) {
      if (v != 0.0f) return false;
    }
  }
  return true;
}

/// Fills `replay` with uniform-random environment interaction.
void fill_random(ReplayBuffer& replay, std::size_t steps, std::uint64_t seed) {
  GraspEnv env(small_env());
  Rng rng(derive_seed(seed, "fill"));
  Rng task_rng(derive_seed(seed, "fill-tasks"));
  std::uint64_t ep = derive_seed(seed, "fill-episodes");
  Observation obs = env.reset(splitmix64(ep), object_sampler("pretrain", task_rng));
  for (std::size_t t = 0; t < steps; ++t) {
    CollectStep step = random_collect_step(env, obs, rng);
    replay.push(std::move(step.transition));
    if (step.outcome == EpisodeOutcome::Running) {
      obs = std::move(step.next_obs);
    } else {
      obs = env.reset(splitmix64(ep), object_sampler("pretrain", task_rng));
    }
  }
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

TEST(TaskProviderTest, FamilyResamplesAndFixedRepeats) {
  Rng rng(7);
  TaskProvider pre = family_tasks("pretrain");
  const TaskSpec a = pre(rng);
  const TaskSpec b = pre(rng);
  EXPECT_NE(a.pose_seed, b.pose_seed);  // fresh draw per episode

  TaskProvider held = family_tasks("heldout_2");
  const TaskSpec h1 = held(rng);
  const TaskSpec h2 = held(rng);
  EXPECT_EQ(h1.radius, h2.radius);
  EXPECT_EQ(h1.pose_seed, h2.pose_seed);

  const TaskSpec pinned = object_sampler("heldout_1", rng);
  TaskProvider fixed = fixed_task(pinned);
  EXPECT_EQ(fixed(rng).radius, pinned.radius);
  EXPECT_EQ(fixed(rng).estimate_bias_y, pinned.estimate_bias_y);

  EXPECT_THROW(family_tasks("ycb"), ConfigError);
}

TEST(SacCollectStepTest, StoresOwnActionWithZeroBaseSlots) {
  AgentBundle agent = make_agent(small_cfg(), 11);
  GraspEnv env(small_env());
  Rng rng(3);
  Rng task_rng(4);
  Observation obs = env.reset(1, object_sampler("pretrain", task_rng));

  CollectStep step = sac_collect_step(agent, env, obs, rng);
  EXPECT_EQ(step.transition.obs.data, obs.flatten().data);
  EXPECT_EQ(step.transition.action.dims, std::vector<std::size_t>{7});
  for (float v : step.transition.action.data) {
    EXPECT_GE(v, -1.0f);
    EXPECT_LE(v, 1.0f);
  }
  EXPECT_EQ(step.transition.a_pre.data, std::vector<float>(7, 0.0f));
  EXPECT_EQ(step.transition.a_pre_next.data, std::vector<float>(7, 0.0f));
  EXPECT_EQ(step.transition.next_obs.data, step.next_obs.flatten().data);
  EXPECT_FLOAT_EQ(step.transition.reward, step.reward.total);
}

TEST(SacCollectStepTest, RejectsResidualAgentsAndWrongEnvironments) {
  SacConfig rcfg = small_cfg();
  rcfg.residual = true;
  AgentBundle residual_agent = make_agent(rcfg, 5);
  GraspEnv env(small_env());
  Rng rng(3);
  Rng task_rng(4);
  Observation obs = env.reset(1, object_sampler("pretrain", task_rng));
  EXPECT_THROW(sac_collect_step(residual_agent, env, obs, rng), StateError);

  SacConfig wrong = small_cfg();
  wrong.obs_dim = 5;
  AgentBundle small_agent = make_agent(wrong, 5);
  EXPECT_THROW(sac_collect_step(small_agent, env, obs, rng), DimensionError);
}

TEST(RandomCollectStepTest, UniformActionWithinBounds) {
  GraspEnv env(small_env());
  Rng rng(9);
  Rng task_rng(2);
  Observation obs = env.reset(1, object_sampler("pretrain", task_rng));
  CollectStep step = random_collect_step(env, obs, rng);
  ASSERT_EQ(step.transition.action.data.size(), 7u);
  for (float v : step.transition.action.data) {
    EXPECT_GE(v, -1.0f);
    EXPECT_LE(v, 1.0f);
  }
  EXPECT_EQ(step.transition.a_pre.data, std::vector<float>(7, 0.0f));
}

TEST(DemoPrefillTest, BufferHoldsExactlyTheCollectedTransitions) {
  ReplayBuffer replay(100000, 1);
  const DemoStats stats =
      demo_prefill(replay, small_env(), family_tasks("pretrain"), 5, 42);
  EXPECT_EQ(stats.episodes, 5u);
  EXPECT_EQ(replay.size(), stats.transitions);
  EXPECT_GT(stats.transitions, 5u);  // several steps per episode

  std::size_t terminal = 0;
  for (std::size_t i = 0; i < replay.size(); ++i) {
    const Transition& t = replay.at(i);
    EXPECT_EQ(t.a_pre.data, std::vector<float>(7, 0.0f));
    EXPECT_EQ(t.a_pre_next.data, std::vector<float>(7, 0.0f));
    for (float v : t.action.data) {
      EXPECT_GE(v, -1.0f);
      EXPECT_LE(v, 1.0f);
    }
    if (t.done || t.truncated) ++terminal;
  }
  EXPECT_EQ(terminal, 5u);  // one episode end per episode
}

TEST(DemoPrefillTest, ScriptedActionsStayBoundedOverManyEpisodes) {
  // The scripted controller must emit legal actions on every step of a long
  // multi-object stretch, not just on easy poses.
  ReplayBuffer replay(100000, 1);
  const DemoStats stats =
      demo_prefill(replay, small_env(), family_tasks("pretrain"), 100, 7);
  EXPECT_EQ(stats.episodes, 100u);
  for (std::size_t i = 0; i < replay.size(); ++i) {
    for (float v : replay.at(i).action.data) {
      EXPECT_GE(v, -1.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
}

TEST(DemoRolloutStatsTest, MatchesPrefillAndIsDeterministic) {
  ReplayBuffer replay(100000, 1);
  const DemoStats with_buffer =
      demo_prefill(replay, small_env(), family_tasks("pretrain"), 8, 99);
  const DemoStats no_buffer =
      demo_rollout_stats(small_env(), family_tasks("pretrain"), 8, 99);
  EXPECT_EQ(no_buffer.successes, with_buffer.successes);
  EXPECT_EQ(no_buffer.transitions, 0u);  // nothing stored
  EXPECT_FLOAT_EQ(no_buffer.mean_return, with_buffer.mean_return);

  const DemoStats again =
      demo_rollout_stats(small_env(), family_tasks("pretrain"), 8, 99);
  EXPECT_EQ(again.successes, no_buffer.successes);
  EXPECT_FLOAT_EQ(again.mean_return, no_buffer.mean_return);
}

TEST(FinetuneInitTest, StartsAsABitExactCopyOfTheBase) {
  const PretrainedPolicy base = freeze_policy(make_agent(small_cfg(), 21));
  const AgentBundle agent = finetune_init(base);

  EXPECT_TRUE(params_equal(agent.actor, base.actor));
  EXPECT_TRUE(params_equal(agent.critic1, base.critic1));
  EXPECT_TRUE(params_equal(agent.critic2, base.critic2));
  EXPECT_TRUE(params_equal(agent.target1, base.critic1));
  EXPECT_TRUE(params_equal(agent.target2, base.critic2));

  // The optimizer and entropy coefficient restart from scratch.
  EXPECT_TRUE(all_zero(agent.actor_opt.m));
  EXPECT_TRUE(all_zero(agent.critic1_opt.v));
  EXPECT_EQ(agent.actor_opt.step, 0u);
  EXPECT_EQ(agent.update_count, 0u);
  EXPECT_FLOAT_EQ(agent.log_alpha, std::log(base.cfg.init_entropy_coef));

  // Same weights, same deterministic actions.
  Rng rng(5);
  Tensor obs({1, base.cfg.obs_dim});
  for (float& v : obs.data) v = rng.uniform(-1.0f, 1.0f);
  const Tensor from_agent = deterministic_action(agent.actor, obs, agent.cfg);
  Tensor flat_obs = obs;
  flat_obs.dims = {base.cfg.obs_dim};
  const Tensor from_base = base_action(base, flat_obs);
  for (std::size_t i = 0; i < from_base.data.size(); ++i) {
    EXPECT_EQ(from_agent.data[i], from_base.data[i]);
  }
}

TEST(FinetuneInitTest, RejectsResidualBases) {
  SacConfig rcfg = small_cfg();
  rcfg.residual = true;
  const PretrainedPolicy residual_base = freeze_policy(make_agent(rcfg, 3));
  EXPECT_THROW(finetune_init(residual_base), ConfigError);
}

TEST(FinetuneIterationTest, RunsExactlyTheRequestedGradientSteps) {
  const PretrainedPolicy base = freeze_policy(make_agent(small_cfg(), 8));
  AgentBundle agent = finetune_init(base);
  ReplayBuffer replay(1000, 2);
  fill_random(replay, 60, 13);

  Rng rng(4);
  const UpdateStats one = finetune_iteration(agent, replay, rng, 1);
  EXPECT_EQ(one.gradient_steps, 1u);
  EXPECT_EQ(agent.update_count, 1u);

  const UpdateStats ten = finetune_iteration(agent, replay, rng, 10);
  EXPECT_EQ(ten.gradient_steps, 10u);
  EXPECT_EQ(agent.update_count, 11u);

  // Training moved the actor away from the base.
  EXPECT_FALSE(params_equal(agent.actor, base.actor));
}

TEST(ReptileOuterUpdateTest, EndpointsAreExact) {
  const ParamSet task = make_params({4, 6, 2}, 31);
  ParamSet meta = make_params({4, 6, 2}, 32);
  const ParamSet meta_before = meta;

  reptile_outer_update(meta, task, 0.0f);
  EXPECT_TRUE(params_equal(meta, meta_before));

  reptile_outer_update(meta, task, 1.0f);
  EXPECT_TRUE(params_equal(meta, task));
}

TEST(ReptileOuterUpdateTest, InterpolatesElementwise) {
  ParamSet meta = make_params({3, 5, 2}, 1).zeros_like();
  ParamSet task = meta.zeros_like();
  for (NamedTensor& t : task.entries) {
    for (float& v : t.value.data) v = 1.0f;
  }
  reptile_outer_update(meta, task, 0.1f);
  for (const NamedTensor& t : meta.entries) {
    for (float v : t.value.data) EXPECT_FLOAT_EQ(v, 0.1f);
  }

  // General case: matches the double-precision formula and stays between the
  // endpoints.
  ParamSet m = make_params({3, 5, 2}, 41);
  const ParamSet m0 = m;
  const ParamSet tk = make_params({3, 5, 2}, 42);
  const float eps = 0.37f;
  reptile_outer_update(m, tk, eps);
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    for (std::size_t j = 0; j < m.entries[i].value.data.size(); ++j) {
      const double m0v = m0.entries[i].value.data[j];
      const double tkv = tk.entries[i].value.data[j];
      const double expect = m0v + eps * (tkv - m0v);
      EXPECT_NEAR(m.entries[i].value.data[j], expect, 1e-6);
      const double lo = std::min(m0v, tkv);
      const double hi = std::max(m0v, tkv);
      EXPECT_GE(m.entries[i].value.data[j], lo - 1e-6);
      EXPECT_LE(m.entries[i].value.data[j], hi + 1e-6);
    }
  }
}

TEST(ReptileOuterUpdateTest, RejectsMismatchedLayoutsAndBadEps) {
  ParamSet meta = make_params({4, 6, 2}, 1);
  const ParamSet other = make_params({4, 7, 2}, 2);
  EXPECT_THROW(reptile_outer_update(meta, other, 0.5f), DimensionError);

  const ParamSet task = make_params({4, 6, 2}, 3);
  EXPECT_THROW(reptile_outer_update(meta, task, -0.1f), ConfigError);
  EXPECT_THROW(reptile_outer_update(meta, task, 1.5f), ConfigError);
}

TEST(ReptileOuterUpdateTest, BundleOverloadTouchesActorAndBothCritics) {
  PretrainedPolicy meta = freeze_policy(make_agent(small_cfg(), 51));
  const AgentBundle task = make_agent(small_cfg(), 52);
  reptile_outer_update(meta, task, 1.0f);
  EXPECT_TRUE(params_equal(meta.actor, task.actor));
  EXPECT_TRUE(params_equal(meta.critic1, task.critic1));
  EXPECT_TRUE(params_equal(meta.critic2, task.critic2));
}

TEST(ReptilePretrainTest, EpsZeroAndDisabledTrainingLeaveMetaUntouched) {
  SacConfig cfg = small_cfg();
  cfg.batch_size = 4;
  cfg.gradient_steps = 1;
  cfg.training_frequency = 5;
  const std::uint64_t seed = 77;
  const PretrainedPolicy init =
      freeze_policy(make_agent(cfg, derive_seed(seed, "meta-init")));

  // eps = 0: inner runs happen but never pull the meta weights.
  ReptileParams frozen;
  frozen.inner_steps = 30;
  frozen.outer_loops = 2;
  frozen.eps = 0.0f;
  frozen.demo_episodes = 1;
  frozen.learning_starts = 5;
  frozen.buffer_capacity = 4000;
  const PretrainedPolicy after_eps0 =
      reptile_pretrain(cfg, small_env(), "pretrain", frozen, seed);
  EXPECT_TRUE(params_equal(after_eps0.actor, init.actor));
  EXPECT_TRUE(params_equal(after_eps0.critic1, init.critic1));

  // eps = 1 but no update ever fires: the inner clone returns unchanged, so
  // meta = clone = meta even at full step size.
  ReptileParams idle = frozen;
  idle.eps = 1.0f;
  idle.learning_starts = 1000000;  // > inner_steps, training never triggers
  const PretrainedPolicy after_idle =
      reptile_pretrain(cfg, small_env(), "pretrain", idle, seed);
  EXPECT_TRUE(params_equal(after_idle.actor, init.actor));
  EXPECT_TRUE(params_equal(after_idle.critic2, init.critic2));
}

TEST(ReptilePretrainTest, TrainingMovesMetaDeterministically) {
  SacConfig cfg = small_cfg();
  cfg.batch_size = 4;
  cfg.gradient_steps = 1;
  cfg.training_frequency = 5;
  ReptileParams params;
  params.inner_steps = 40;
  params.outer_loops = 2;
  params.eps = 0.5f;
  params.demo_episodes = 1;
  params.learning_starts = 5;
  params.buffer_capacity = 4000;

  const PretrainedPolicy init =
      freeze_policy(make_agent(cfg, derive_seed(123, "meta-init")));
  const PretrainedPolicy a =
      reptile_pretrain(cfg, small_env(), "pretrain", params, 123);
  const PretrainedPolicy b =
      reptile_pretrain(cfg, small_env(), "pretrain", params, 123);
  EXPECT_FALSE(params_equal(a.actor, init.actor));
  EXPECT_TRUE(params_equal(a.actor, b.actor));
  EXPECT_TRUE(params_equal(a.critic1, b.critic1));
  EXPECT_TRUE(params_equal(a.critic2, b.critic2));
}

TEST(ReptilePretrainTest, MetaCheckpointRoundTrips) {
  SacConfig cfg = small_cfg();
  cfg.batch_size = 4;
  cfg.gradient_steps = 1;
  ReptileParams params;
  params.inner_steps = 10;
  params.outer_loops = 1;
  params.demo_episodes = 1;
  params.learning_starts = 2;
  params.buffer_capacity = 1000;
  const PretrainedPolicy meta =
      reptile_pretrain(cfg, small_env(), "heldout_0", params, 5);

  const std::string path = temp_path("resprect_meta_ckpt.bin");
  save_policy_checkpoint(meta, path);
  const PretrainedPolicy loaded = load_pretrained(path);
  EXPECT_TRUE(params_equal(loaded.actor, meta.actor));
  EXPECT_TRUE(params_equal(loaded.critic1, meta.critic1));
  EXPECT_TRUE(params_equal(loaded.critic2, meta.critic2));
  EXPECT_EQ(loaded.cfg.obs_dim, meta.cfg.obs_dim);
  EXPECT_EQ(loaded.cfg.hidden, meta.cfg.hidden);
  std::remove(path.c_str());
}

TEST(EvaluatePolicyTest, DeterministicWithPerEpisodeCallback) {
  const AgentBundle agent = make_agent(small_cfg(), 31);
  auto policy = [&agent](const Tensor& s) {
    Tensor row = s;
    row.dims = {1, s.dims[0]};
    Tensor a = deterministic_action(agent.actor, row, agent.cfg);
    a.dims = {a.dims[1]};
    return a;
  };

  std::vector<EpisodeOutcome> outcomes;
  const EvalStats stats =
      evaluate_policy(small_env(), family_tasks("pretrain"), 6, 17, policy,
                      [&outcomes](std::size_t ep, EpisodeOutcome o, float) {
                        EXPECT_EQ(ep, outcomes.size() + 1);
                        outcomes.push_back(o);
                      });
  EXPECT_EQ(stats.episodes, 6u);
  EXPECT_EQ(outcomes.size(), 6u);
  for (EpisodeOutcome o : outcomes) EXPECT_NE(o, EpisodeOutcome::Running);

  const EvalStats again =
      evaluate_policy(small_env(), family_tasks("pretrain"), 6, 17, policy);
  EXPECT_EQ(again.successes, stats.successes);
  EXPECT_FLOAT_EQ(again.mean_return, stats.mean_return);

  EXPECT_THROW(evaluate_policy(small_env(), family_tasks("pretrain"), 0, 1, policy),
               ConfigError);
}

TEST(EvaluatePretrainedTest, RunsSeededEpisodesFromACheckpointFile) {
  const AgentBundle agent = make_agent(small_cfg(), 61);
  const std::string path = temp_path("resprect_eval_ckpt.bin");
  save_agent_checkpoint(agent, path);

  Rng rng(1);
  const TaskSpec task = object_sampler("heldout_0", rng);
  const EvalStats a = evaluate_pretrained(path, task, 4, 9);
  const EvalStats b = evaluate_pretrained(path, task, 4, 9);
  EXPECT_EQ(a.episodes, 4u);
  EXPECT_EQ(a.successes, b.successes);
  EXPECT_FLOAT_EQ(a.mean_return, b.mean_return);

  EXPECT_THROW(evaluate_pretrained(path, task, 0, 9), ConfigError);
  std::remove(path.c_str());
}

}  // namespace
}  // namespace resprect
