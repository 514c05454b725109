#include "resprect/runlog.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "resprect/errors.hpp"

namespace resprect {

namespace {

constexpr std::size_t kSuccessWindow = 30;

std::string fmt(float v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

EpisodeOutcome outcome_from_name(const std::string& name) {
  for (EpisodeOutcome o : {EpisodeOutcome::Running, EpisodeOutcome::Success,
                           EpisodeOutcome::FailDisplaced,
                           EpisodeOutcome::FailWorkspace, EpisodeOutcome::Timeout}) {
    if (name == outcome_name(o)) return o;
  }
  throw StateError("episode log: unknown outcome '" + name + "'");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

RunLogWriter::RunLogWriter(const std::string& dir) {
  if (dir.empty()) throw StateError("run log: directory must not be empty");
  std::filesystem::create_directories(dir);
  const std::string epath = dir + "/episodes.csv";
  const std::string upath = dir + "/updates.csv";
  episodes_.open(epath, std::ios::trunc);
  updates_.open(upath, std::ios::trunc);
  if (!episodes_ || !updates_) {
    throw StateError("run log: cannot open CSV files under '" + dir + "'");
  }
  episodes_ << "# episodes-v1\n"
            << "timestep,episode,outcome,return,success_ma\n";
  updates_ << "# updates-v1\n"
           << "timestep,critic1_loss,critic2_loss,actor_loss,alpha_loss,alpha,"
              "mean_log_prob\n";
}

float RunLogWriter::success_ma() const {
  if (window_.empty()) return 0.0f;
  float sum = 0.0f;
  for (float s : window_) sum += s;
  return sum / static_cast<float>(window_.size());
}

EpisodeRow RunLogWriter::log_episode(std::size_t timestep, EpisodeOutcome outcome,
                                     float episode_return) {
  if (outcome == EpisodeOutcome::Running) {
    throw StateError("run log: cannot log an unfinished episode");
  }
  if (timestep <= last_episode_timestep_) {
    throw StateError("run log: episode timesteps must strictly increase");
  }
  last_episode_timestep_ = timestep;
  ++episode_count_;
  window_.push_back(outcome == EpisodeOutcome::Success ? 1.0f : 0.0f);
  if (window_.size() > kSuccessWindow) window_.pop_front();

  EpisodeRow row;
  row.timestep = timestep;
  row.episode = episode_count_;
  row.outcome = outcome;
  row.episode_return = episode_return;
  row.success_ma = success_ma();
  episodes_ << row.timestep << ',' << row.episode << ',' << outcome_name(outcome)
            << ',' << fmt(row.episode_return) << ',' << fmt(row.success_ma) << '\n';
  episodes_.flush();
  return row;
}

void RunLogWriter::log_update(std::size_t timestep, const UpdateStats& stats) {
  if (timestep <= last_update_timestep_) {
    throw StateError("run log: update timesteps must strictly increase");
  }
  last_update_timestep_ = timestep;
  updates_ << timestep << ',' << fmt(stats.critic1_loss) << ','
           << fmt(stats.critic2_loss) << ',' << fmt(stats.actor_loss) << ','
           << fmt(stats.alpha_loss) << ',' << fmt(stats.alpha) << ','
           << fmt(stats.mean_log_prob) << '\n';
  updates_.flush();
}

std::vector<EpisodeRow> read_episode_log(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw StateError("episode log '" + path + "' does not exist");
  std::string line;
  if (!std::getline(is, line) || line != "# episodes-v1") {
    throw StateError("episode log '" + path + "' has an unexpected header");
  }
  std::getline(is, line);  // column names
  std::vector<EpisodeRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv(line);
    if (cells.size() != 5) {
      throw StateError("episode log '" + path + "': malformed row '" + line + "'");
    }
    EpisodeRow row;
    row.timestep = static_cast<std::size_t>(std::stoull(cells[0]));
    row.episode = static_cast<std::size_t>(std::stoull(cells[1]));
    row.outcome = outcome_from_name(cells[2]);
    row.episode_return = std::stof(cells[3]);
    row.success_ma = std::stof(cells[4]);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace resprect
