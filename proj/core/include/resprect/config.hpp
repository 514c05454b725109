#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "resprect/env.hpp"
#include "resprect/sac.hpp"

namespace resprect {

/// Full description of one run: training hyperparameters, environment
/// settings, mode, seed and paths.  Defaults are the published training
/// hyperparameters; experiment files override the desk-scale knobs.
struct RunConfig {
  // What to run.
  std::string mode = "scratch";  // scratch|resprect|residual_plain|finetune|
                                 // reptile|reptile_pretrain|demo|eval
  std::uint64_t seed = 0;

  // Optimisation (fixed rows are validated, not configurable).
  std::string optimizer = "adam";
  float lr = 3e-4f;
  float gamma = 0.99f;
  std::size_t buffer_size = 1000000;
  std::size_t hidden_layers = 2;
  std::size_t hidden = 2048;
  std::size_t batch_size = 256;
  std::string target_entropy = "auto";  // "auto" = -action_dim, or a number
  std::string nonlinearity = "relu";
  float tau = 0.005f;
  std::size_t target_update_interval = 1;
  std::size_t gradient_steps = 10;
  std::size_t training_frequency = 10;
  std::size_t total_timesteps = 100000;
  float init_entropy_coef = 0.01f;
  bool fixed_alpha = false;
  std::size_t learning_starts = 100;

  // Residual / fine-tuning specifics.
  float residual_scale = 1.0f;
  std::size_t finetune_gradient_steps = 1;

  // Environment.
  std::size_t fingers = 3;
  std::size_t max_steps = 100;
  float obs_noise_sigma = 0.01f;
  bool reach_only = false;
  std::string task_family = "pretrain";

  // Baselines.
  std::size_t demo_episodes = 50;  // replay prefill for from-scratch training
  std::size_t reptile_inner_steps = 1000;
  std::size_t reptile_outer_loops = 10;
  float reptile_eps = 0.1f;
  std::size_t eval_episodes = 100;

  // Paths.
  std::string run_dir;
  std::string base_checkpoint;

  /// -action_dim when "auto", otherwise the configured number.
  float resolved_target_entropy(std::size_t action_dim) const;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses flat "key = value" text with '#' comments into ordered pairs.
KeyValues parse_key_values(const std::string& text);

/// Applies pairs onto a config; unknown keys and malformed values throw
/// ConfigError.
void apply_key_values(RunConfig& cfg, const KeyValues& kvs);

/// Whole-struct validation (ranges, mode, fixed rows, required paths).
void validate_config(const RunConfig& cfg);

/// defaults <- file <- overrides, then validated.  Empty path skips the file.
RunConfig load_config(const std::string& path, const KeyValues& overrides = {});

/// All recognised keys in canonical echo order (drives CLI flag generation).
std::vector<std::string> config_keys();

/// Canonical echo: every key in schema order, parseable by parse_key_values,
/// bit-stable across runs (used for config hashing and run provenance).
std::string echo_config(const RunConfig& cfg);

/// FNV-1a hash of the canonical echo, as fixed-width hex.
std::string config_hash(const RunConfig& cfg);

/// Builders for the module-level configs this run implies.
EnvConfig env_config(const RunConfig& cfg);
SacConfig sac_config(const RunConfig& cfg, std::size_t obs_dim, std::size_t action_dim);

}  // namespace resprect
