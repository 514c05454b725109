// Command-line front end.  Each subcommand pre-selects a run mode, every
// config key is exposed as a flag (plus an optional `--config file`), and a
// finished run leaves a self-describing directory behind: echoed config,
// episode/update CSVs, checkpoints and a summary.
//
// Exit codes: 0 success, 1 validation/usage error, 2 runtime failure.
#include <algorithm>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "resprect/config.hpp"
#include "resprect/errors.hpp"
#include "resprect/trainer.hpp"

namespace {

using resprect::KeyValues;

/// One flag per recognised config key (`--buffer-size` and `--buffer_size`
/// both work), collected in command-line order so later flags win.
void add_config_flags(CLI::App& cmd, KeyValues& overrides) {
  for (const std::string& key : resprect::config_keys()) {
    std::string names = "--" + key;
    if (names.find('_') != std::string::npos) {
      std::string dashed = names;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      names = dashed + "," + names;
    }
    cmd.add_option_function<std::string>(
           names,
           [key, &overrides](const std::string& value) {
             overrides.emplace_back(key, value);
           })
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)
        ->group("Config keys");
  }
}

/// State shared by the run-style subcommands (everything except
/// speedup-report).
struct RunArgs {
  std::string config_file;
  KeyValues overrides;
  std::string default_mode;
  std::vector<std::string> allowed_modes;
};

CLI::App* add_run_command(CLI::App& app, RunArgs& args, const std::string& name,
                          const std::string& description,
                          const std::string& default_mode,
                          std::vector<std::string> allowed_modes) {
  args.default_mode = default_mode;
  args.allowed_modes = std::move(allowed_modes);
  CLI::App* cmd = app.add_subcommand(name, description);
  cmd->add_option("-c,--config", args.config_file,
                  "key = value config file (flags override it)")
      ->check(CLI::ExistingFile);
  add_config_flags(*cmd, args.overrides);
  return cmd;
}

int execute_run(const RunArgs& args) {
  // Subcommand default first, then the user's flags, so an explicit --mode
  // (within the subcommand's family) still wins.
  KeyValues overrides;
  overrides.emplace_back("mode", args.default_mode);
  overrides.insert(overrides.end(), args.overrides.begin(),
                   args.overrides.end());
  const resprect::RunConfig cfg =
      resprect::load_config(args.config_file, overrides);
  if (std::find(args.allowed_modes.begin(), args.allowed_modes.end(),
                cfg.mode) == args.allowed_modes.end()) {
    throw resprect::ConfigError("mode '" + cfg.mode +
                                "' does not belong to this subcommand");
  }

  const resprect::RunResult result = resprect::run_training(cfg);
  std::printf("run_dir            %s\n", result.run_dir.c_str());
  std::printf("episodes           %zu\n", result.episodes);
  std::printf("final_success_ma   %.3f\n",
              static_cast<double>(result.final_success_ma));
  if (!result.final_checkpoint.empty()) {
    std::printf("final_checkpoint   %s\n", result.final_checkpoint.c_str());
  }
  if (cfg.mode == "eval") {
    std::printf("eval_success_rate  %.3f\n",
                static_cast<double>(result.eval.success_rate));
    std::printf("eval_mean_return   %.3f\n",
                static_cast<double>(result.eval.mean_return));
  }
  if (cfg.mode == "demo") {
    std::printf("demo_success_rate  %.3f\n",
                static_cast<double>(result.demo.success_rate));
    std::printf("demo_transitions   %zu\n", result.demo.transitions);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual reinforcement learning on a pretrained grasping "
               "policy: pretraining, residual/fine-tune/meta adaptation, "
               "scripted demos, evaluation and curve comparison."};
  app.require_subcommand(1);

  RunArgs pretrain_args;
  CLI::App* pretrain = add_run_command(
      app, pretrain_args, "pretrain",
      "From-scratch SAC with scripted-demo replay prefill (base policy)",
      "scratch", {"scratch"});

  RunArgs residual_args;
  CLI::App* train_residual = add_run_command(
      app, residual_args, "train-residual",
      "Residual SAC on top of a frozen base policy (critics warm-started; "
      "--mode residual_plain for the cold-start ablation)",
      "resprect", {"resprect", "residual_plain"});

  RunArgs finetune_args;
  CLI::App* finetune = add_run_command(
      app, finetune_args, "finetune",
      "Continue training a checkpoint on a new task (--mode reptile to label "
      "the run as meta-initialised adaptation)",
      "finetune", {"finetune", "reptile"});

  RunArgs reptile_args;
  CLI::App* reptile_pretrain = add_run_command(
      app, reptile_args, "reptile-pretrain",
      "First-order meta-pretraining over the task family", "reptile_pretrain",
      {"reptile_pretrain"});

  RunArgs demo_args;
  CLI::App* demo_collect = add_run_command(
      app, demo_args, "demo-collect",
      "Roll out the scripted grasping controller and log its curve", "demo",
      {"demo"});

  RunArgs eval_args;
  CLI::App* evaluate = add_run_command(
      app, eval_args, "evaluate",
      "Deterministic evaluation of a checkpoint over seeded episodes", "eval",
      {"eval"});
  std::string eval_checkpoint;
  evaluate
      ->add_option("checkpoint", eval_checkpoint,
                   "checkpoint file (same as --base-checkpoint)")
      ->check(CLI::ExistingFile);

  std::string curve_a;
  std::string curve_b;
  float threshold = 0.6f;
  CLI::App* speedup = app.add_subcommand(
      "speedup-report",
      "How many times faster curve A reaches a success threshold than B");
  speedup->add_option("curve_a", curve_a, "episodes.csv of the faster candidate")
      ->required()
      ->check(CLI::ExistingFile);
  speedup->add_option("curve_b", curve_b, "episodes.csv of the reference")
      ->required()
      ->check(CLI::ExistingFile);
  speedup->add_option("-t,--threshold", threshold,
                      "moving-average success threshold in [0,1]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // help/version vs. usage error
  }

  try {
    if (pretrain->parsed()) return execute_run(pretrain_args);
    if (train_residual->parsed()) return execute_run(residual_args);
    if (finetune->parsed()) return execute_run(finetune_args);
    if (reptile_pretrain->parsed()) return execute_run(reptile_args);
    if (demo_collect->parsed()) return execute_run(demo_args);
    if (evaluate->parsed()) {
      if (!eval_checkpoint.empty()) {
        eval_args.overrides.emplace_back("base_checkpoint", eval_checkpoint);
      }
      return execute_run(eval_args);
    }
    if (speedup->parsed()) {
      const resprect::SpeedupResult result =
          resprect::speedup_report_files(curve_a, curve_b, threshold);
      std::printf("%s", resprect::speedup_to_string(result).c_str());
      return 0;
    }
  } catch (const resprect::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;  // unreachable with require_subcommand(1)
}
