#include "resprect/trainer.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <utility>

#include "resprect/checkpoint.hpp"
#include "resprect/demo.hpp"
#include "resprect/errors.hpp"

namespace resprect {

namespace {

std::string fmt(float v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

/// Keeps the checkpoint's architecture fields and adopts the run's training
/// hyperparameters (a fine-tuning run may use different lr/batch/etc. than
/// the pretraining run did).
SacConfig adopt_training_knobs(SacConfig arch, const SacConfig& run) {
  arch.lr = run.lr;
  arch.gamma = run.gamma;
  arch.tau = run.tau;
  arch.target_update_interval = run.target_update_interval;
  arch.batch_size = run.batch_size;
  arch.gradient_steps = run.gradient_steps;
  arch.training_frequency = run.training_frequency;
  arch.init_entropy_coef = run.init_entropy_coef;
  arch.fixed_alpha = run.fixed_alpha;
  arch.target_entropy = run.target_entropy;
  return arch;
}

void check_checkpoint_fits_env(const SacConfig& ckpt, const GraspEnv& env) {
  if (ckpt.obs_dim != env.obs_dim() || ckpt.action_dim != env.action_dim()) {
    throw ConfigError("base checkpoint dims (" + std::to_string(ckpt.obs_dim) +
                      ", " + std::to_string(ckpt.action_dim) +
                      ") do not match the configured environment (" +
                      std::to_string(env.obs_dim()) + ", " +
                      std::to_string(env.action_dim()) + ")");
  }
}

/// Steps 10%, 20%, ..., 90% of the budget, deduplicated for tiny budgets.
std::vector<std::pair<std::size_t, std::size_t>> checkpoint_boundaries(
    std::size_t total) {
  std::vector<std::pair<std::size_t, std::size_t>> out;  // (step, percent)
  for (std::size_t k = 1; k <= 9; ++k) {
    const std::size_t step = total * k / 10;
    if (step >= 1 && (out.empty() || step > out.back().first)) {
      out.emplace_back(step, k * 10);
    }
  }
  return out;
}

std::string checkpoint_metadata(const RunConfig& cfg, std::size_t step) {
  std::ostringstream os;
  os << "mode = " << cfg.mode << "\n"
     << "step = " << step << "\n"
     << "config_hash = " << config_hash(cfg) << "\n";
  return os.str();
}

/// The five learning modes share one collect/update loop; they differ only
/// in how the agent is built and which update routine runs.
void train_run(const RunConfig& cfg, RunLogWriter& log, RunResult& result) {
  const EnvConfig ecfg = env_config(cfg);
  GraspEnv env(ecfg);
  const SacConfig scfg = sac_config(cfg, env.obs_dim(), env.action_dim());

  const TaskProvider tasks = family_tasks(cfg.task_family);
  Rng task_rng(derive_seed(cfg.seed, "tasks"));
  Rng train_rng(derive_seed(cfg.seed, "train"));
  std::uint64_t ep_state = derive_seed(cfg.seed, "episodes");
  ReplayBuffer replay(cfg.buffer_size, derive_seed(cfg.seed, "replay"));

  const bool residual = cfg.mode == "resprect" || cfg.mode == "residual_plain";
  const bool finetuned = cfg.mode == "finetune" || cfg.mode == "reptile";

  std::optional<ResidualAgent> ragent;
  std::optional<AgentBundle> agent;
  if (residual) {
    PretrainedPolicy base = load_pretrained(cfg.base_checkpoint);
    check_checkpoint_fits_env(base.cfg, env);
    ragent = make_residual_agent(base, scfg, derive_seed(cfg.seed, "agent"),
                                 /*warm_start=*/cfg.mode == "resprect");
  } else if (finetuned) {
    PretrainedPolicy base = load_pretrained(cfg.base_checkpoint);
    check_checkpoint_fits_env(base.cfg, env);
    base.cfg = adopt_training_knobs(base.cfg, scfg);
    agent = finetune_init(base);
  } else {  // scratch, with the demo-prefilled buffer
    agent = make_agent(scfg, derive_seed(cfg.seed, "agent"));
    demo_prefill(replay, ecfg, tasks, cfg.demo_episodes,
                 derive_seed(cfg.seed, "demos"));
  }

  const auto boundaries = checkpoint_boundaries(cfg.total_timesteps);
  auto next_boundary = boundaries.begin();
  auto save_at = [&](const std::string& name, std::size_t step) {
    const std::string path = cfg.run_dir + "/" + name;
    if (residual) {
      save_residual_checkpoint(*ragent, path, checkpoint_metadata(cfg, step));
    } else {
      save_agent_checkpoint(*agent, path, checkpoint_metadata(cfg, step));
    }
  };

  Observation obs = env.reset(splitmix64(ep_state), tasks(task_rng));
  float ep_return = 0.0f;
  for (std::size_t t = 1; t <= cfg.total_timesteps; ++t) {
    const bool warmup = t <= cfg.learning_starts;
    CollectStep step;
    if (residual) {
      step = warmup ? resprect_collect_random(*ragent, env, obs, train_rng)
                    : resprect_collect_step(*ragent, env, obs, train_rng);
    } else {
      step = warmup ? random_collect_step(env, obs, train_rng)
                    : sac_collect_step(*agent, env, obs, train_rng);
    }

    replay.push(std::move(step.transition));
    ep_return += step.reward.total;

    if (step.outcome == EpisodeOutcome::Running) {
      obs = std::move(step.next_obs);
    } else {
      log.log_episode(t, step.outcome, ep_return);
      ep_return = 0.0f;
      obs = env.reset(splitmix64(ep_state), tasks(task_rng));
    }

    if (t % cfg.training_frequency == 0 && t >= cfg.learning_starts) {
      UpdateStats us;
      if (residual) {
        us = resprect_update(*ragent, replay, train_rng);
      } else if (finetuned) {
        us = finetune_iteration(*agent, replay, train_rng,
                                cfg.finetune_gradient_steps);
      } else {
        us = sac_train_iteration(*agent, replay, train_rng);
      }
      log.log_update(t, us);
    }

    if (next_boundary != boundaries.end() && t == next_boundary->first) {
      save_at("checkpoint_" + std::to_string(next_boundary->second) + ".bin", t);
      ++next_boundary;
    }
  }

  save_at("final.bin", cfg.total_timesteps);
  result.final_checkpoint = cfg.run_dir + "/final.bin";
  result.episodes = log.episodes();
  result.final_success_ma = log.success_ma();
}

/// Scripted-controller rollouts, logged like training episodes — the flat
/// demonstrations curve.
void demo_run(const RunConfig& cfg, RunLogWriter& log, RunResult& result) {
  GraspEnv env(env_config(cfg));
  const TaskProvider tasks = family_tasks(cfg.task_family);
  Rng task_rng(derive_seed(cfg.seed, "tasks"));
  std::uint64_t ep_state = derive_seed(cfg.seed, "episodes");

  DemoStats stats;
  stats.episodes = cfg.demo_episodes;
  double return_sum = 0.0;
  std::size_t t = 0;
  for (std::size_t ep = 0; ep < cfg.demo_episodes; ++ep) {
    Observation obs = env.reset(splitmix64(ep_state), tasks(task_rng));
    float ep_return = 0.0f;
    EpisodeOutcome outcome = EpisodeOutcome::Running;
    while (outcome == EpisodeOutcome::Running) {
      GraspEnv::StepResult r = env.step(scripted_demo_policy(obs, env.world()));
      ++t;
      ++stats.transitions;
      ep_return += r.reward.total;
      obs = r.obs;
      outcome = r.outcome;
    }
    if (outcome == EpisodeOutcome::Success) ++stats.successes;
    return_sum += ep_return;
    log.log_episode(t, outcome, ep_return);
  }
  if (cfg.demo_episodes > 0) {
    stats.success_rate = static_cast<float>(stats.successes) /
                         static_cast<float>(cfg.demo_episodes);
    stats.mean_return = static_cast<float>(return_sum / cfg.demo_episodes);
  }
  result.demo = stats;
  result.episodes = log.episodes();
  result.final_success_ma = log.success_ma();
}

/// Deterministic rollouts of a checkpointed policy, with per-episode rows in
/// eval.csv — the flat pre-trained curve.
void eval_run(const RunConfig& cfg, RunResult& result) {
  const EnvConfig ecfg = env_config(cfg);
  const LoadedPolicy policy = load_policy_checkpoint(cfg.base_checkpoint);
  {
    GraspEnv probe(ecfg);
    check_checkpoint_fits_env(policy.cfg, probe);
  }

  std::ofstream csv(cfg.run_dir + "/eval.csv", std::ios::trunc);
  if (!csv) throw StateError("run_training: cannot write eval.csv");
  csv << "# eval-v1\n" << "episode,outcome,return\n";

  result.eval = evaluate_policy(
      ecfg, family_tasks(cfg.task_family), cfg.eval_episodes, cfg.seed,
      [&policy](const Tensor& s) { return loaded_policy_action(policy, s); },
      [&csv](std::size_t ep, EpisodeOutcome outcome, float ep_return) {
        csv << ep << ',' << outcome_name(outcome) << ',' << fmt(ep_return)
            << '\n';
      });
  result.episodes = result.eval.episodes;
  result.final_success_ma = result.eval.success_rate;
}

void reptile_run(const RunConfig& cfg, RunResult& result) {
  GraspEnv probe(env_config(cfg));
  const SacConfig scfg = sac_config(cfg, probe.obs_dim(), probe.action_dim());
  ReptileParams params;
  params.inner_steps = cfg.reptile_inner_steps;
  params.outer_loops = cfg.reptile_outer_loops;
  params.eps = cfg.reptile_eps;
  params.demo_episodes = cfg.demo_episodes;
  params.learning_starts = cfg.learning_starts;
  params.buffer_capacity = cfg.buffer_size;

  const PretrainedPolicy meta = reptile_pretrain(scfg, env_config(cfg),
                                                 cfg.task_family, params,
                                                 cfg.seed);
  const std::string path = cfg.run_dir + "/final.bin";
  save_policy_checkpoint(
      meta, path,
      checkpoint_metadata(cfg, cfg.reptile_inner_steps * cfg.reptile_outer_loops));
  result.final_checkpoint = path;
}

}  // namespace

RunResult run_training(const RunConfig& cfg) {
  validate_config(cfg);
  if (cfg.run_dir.empty()) {
    throw ConfigError("run_training: run_dir must be set");
  }
  std::filesystem::create_directories(cfg.run_dir);
  {
    std::ofstream os(cfg.run_dir + "/config.txt", std::ios::trunc);
    if (!os) throw StateError("run_training: cannot write config echo");
    os << echo_config(cfg);
  }

  RunLogWriter log(cfg.run_dir);
  RunResult result;
  result.run_dir = cfg.run_dir;
  if (cfg.mode == "demo") {
    demo_run(cfg, log, result);
  } else if (cfg.mode == "eval") {
    eval_run(cfg, result);
  } else if (cfg.mode == "reptile_pretrain") {
    reptile_run(cfg, result);
  } else {
    train_run(cfg, log, result);
  }

  std::ofstream summary(cfg.run_dir + "/summary.txt", std::ios::trunc);
  summary << "mode = " << cfg.mode << "\n"
          << "episodes = " << result.episodes << "\n"
          << "final_success_ma = " << fmt(result.final_success_ma) << "\n";
  if (!result.final_checkpoint.empty()) {
    summary << "final_checkpoint = " << result.final_checkpoint << "\n";
  }
  if (cfg.mode == "eval") {
    summary << "eval_success_rate = " << fmt(result.eval.success_rate) << "\n"
            << "eval_mean_return = " << fmt(result.eval.mean_return) << "\n";
  }
  if (cfg.mode == "demo") {
    summary << "demo_success_rate = " << fmt(result.demo.success_rate) << "\n"
            << "demo_mean_return = " << fmt(result.demo.mean_return) << "\n";
  }
  return result;
}

RunResult gpayn_pretrain(RunConfig cfg) {
  cfg.mode = "scratch";
  return run_training(cfg);
}

SpeedupResult speedup_report(const std::vector<EpisodeRow>& curve_a,
                             const std::vector<EpisodeRow>& curve_b,
                             float threshold) {
  if (threshold < 0.0f || threshold > 1.0f) {
    throw ConfigError("speedup_report: threshold must be in [0,1]");
  }
  auto first_cross = [threshold](const std::vector<EpisodeRow>& rows,
                                 bool& reached) -> std::size_t {
    for (const EpisodeRow& row : rows) {
      if (row.success_ma >= threshold) {
        reached = true;
        return row.timestep;
      }
    }
    reached = false;
    return 0;
  };

  SpeedupResult r;
  r.threshold = threshold;
  r.step_a = first_cross(curve_a, r.a_reached);
  r.step_b = first_cross(curve_b, r.b_reached);
  if (!r.b_reached) {
    r.ratio = std::numeric_limits<float>::infinity();
  } else if (!r.a_reached) {
    r.ratio = 0.0f;
  } else {
    r.ratio = static_cast<float>(r.step_b) / static_cast<float>(r.step_a);
  }
  return r;
}

SpeedupResult speedup_report_files(const std::string& episodes_csv_a,
                                   const std::string& episodes_csv_b,
                                   float threshold) {
  return speedup_report(read_episode_log(episodes_csv_a),
                        read_episode_log(episodes_csv_b), threshold);
}

std::string speedup_to_string(const SpeedupResult& r) {
  std::ostringstream os;
  // Report text is for humans; %g keeps 0.6f as "0.6" rather than the exact
  // round-trip digits the CSVs use.
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", static_cast<double>(r.threshold));
  const std::string thr = buf;
  os << "curve A: "
     << (r.a_reached ? "moving average reached " + thr + " at timestep " +
                           std::to_string(r.step_a)
                     : "did not reach " + thr)
     << "\n";
  os << "curve B: "
     << (r.b_reached ? "moving average reached " + thr + " at timestep " +
                           std::to_string(r.step_b)
                     : "did not reach " + thr)
     << "\n";
  if (r.a_reached && r.b_reached) {
    os << "speedup (B/A) = " << fmt(r.ratio) << "x\n";
  } else {
    os << "speedup (B/A) = not reached\n";
  }
  return os.str();
}

}  // namespace resprect
