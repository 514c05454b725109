#pragma once

#include <cstddef>
#include <deque>
#include <fstream>
#include <string>
#include <vector>

#include "resprect/env.hpp"
#include "resprect/sac.hpp"

namespace resprect {

/// One finished episode as it appears in episodes.csv.
struct EpisodeRow {
  std::size_t timestep = 0;  ///< env steps taken when the episode ended
  std::size_t episode = 0;   ///< 1-based episode index
  EpisodeOutcome outcome = EpisodeOutcome::Running;
  float episode_return = 0.0f;
  float success_ma = 0.0f;  ///< success rate over the last min(30, episode) episodes
};

/// One training iteration as it appears in updates.csv.
struct UpdateRow {
  std::size_t timestep = 0;
  UpdateStats stats;
};

/// Streams the two training CSVs for a run directory.
///
/// Rows are written eagerly with fixed "%.9g" float formatting and no
/// timestamps, so two runs with identical inputs produce byte-identical
/// files.  Timesteps must be strictly increasing within each file.
class RunLogWriter {
 public:
  explicit RunLogWriter(const std::string& dir);

  /// Appends an episode row and returns it (with the moving average filled in).
  EpisodeRow log_episode(std::size_t timestep, EpisodeOutcome outcome,
                         float episode_return);

  void log_update(std::size_t timestep, const UpdateStats& stats);

  std::size_t episodes() const { return episode_count_; }
  float success_ma() const;

 private:
  std::ofstream episodes_;
  std::ofstream updates_;
  std::size_t episode_count_ = 0;
  std::size_t last_episode_timestep_ = 0;
  std::size_t last_update_timestep_ = 0;
  std::deque<float> window_;  ///< success indicators of the last <= 30 episodes
};

/// Parses an episodes.csv produced by RunLogWriter.
std::vector<EpisodeRow> read_episode_log(const std::string& path);

}  // namespace resprect
