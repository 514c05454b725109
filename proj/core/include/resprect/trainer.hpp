#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "resprect/baselines.hpp"
#include "resprect/config.hpp"
#include "resprect/runlog.hpp"

namespace resprect {

/// What a finished run left behind.
struct RunResult {
  std::string run_dir;
  std::string final_checkpoint;  ///< empty for demo/eval runs
  std::size_t episodes = 0;
  float final_success_ma = 0.0f;
  EvalStats eval;  ///< filled by mode = eval
  DemoStats demo;  ///< filled by mode = demo
};

/// Executes `cfg.mode` into `cfg.run_dir`: learning modes run for
/// `cfg.total_timesteps` with periodic checkpoints (every 10% of the budget)
/// plus a final one; demo/eval modes are episode-count driven and emit their
/// rollout logs instead.  Every run writes the echoed config and the two
/// run-log CSVs and is fully deterministic given config + seed.
RunResult run_training(const RunConfig& cfg);

/// From-scratch SAC with a demo-prefilled replay buffer; returns the run
/// whose final checkpoint serves as the pretrained base policy.
RunResult gpayn_pretrain(RunConfig cfg);

/// Time-to-threshold comparison between two episode logs.
struct SpeedupResult {
  float threshold = 0.0f;
  bool a_reached = false;
  bool b_reached = false;
  std::size_t step_a = 0;  ///< first timestep curve A's moving average >= threshold
  std::size_t step_b = 0;
  float ratio = 0.0f;  ///< step_b / step_a; +inf when B never reaches it
};

/// threshold must lie in [0,1].  ratio reads "A is `ratio`x faster than B".
SpeedupResult speedup_report(const std::vector<EpisodeRow>& curve_a,
                             const std::vector<EpisodeRow>& curve_b,
                             float threshold);
SpeedupResult speedup_report_files(const std::string& episodes_csv_a,
                                   const std::string& episodes_csv_b,
                                   float threshold);

/// Human-readable rendering, with a "not reached" sentinel where applicable.
std::string speedup_to_string(const SpeedupResult& r);

}  // namespace resprect
