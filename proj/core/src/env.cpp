#include "resprect/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "resprect/errors.hpp"

namespace resprect {

namespace {

constexpr float kTwoPi = 6.2831853071795864f;

float clampf(float v, float lo, float hi) { return std::min(std::max(v, lo), hi); }

float planar_dist(float ax, float ay, float bx, float by) {
  const float dx = ax - bx;
  const float dy = ay - by;
  return std::sqrt(dx * dx + dy * dy);
}

void validate_env_config(const EnvConfig& cfg) {
  if (cfg.fingers < 2) {
    throw ConfigError("EnvConfig: need at least 2 fingers, got " +
                      std::to_string(cfg.fingers));
  }
  if (cfg.max_steps == 0) throw ConfigError("EnvConfig: max_steps must be positive");
  if (!(cfg.obs_noise_sigma >= 0.0f)) {
    throw ConfigError("EnvConfig: obs_noise_sigma must be >= 0");
  }
}

/// Deep penetration: the tip is well inside the rim, so an ungrasped object
/// gets shoved instead of held.
bool finger_penetrates(const GraspWorld& w, std::size_t finger) {
  if (std::fabs(w.z - w.oz) > kContactZRange) return false;
  float tx, ty;
  tip_position(w, finger, &tx, &ty);
  return planar_dist(tx, ty, w.ox, w.oy) < w.task.radius - kContactBand;
}

int count_contacts(const GraspWorld& w) {
  int n = 0;
  for (std::size_t i = 0; i < w.cfg.fingers; ++i) {
    if (finger_in_contact(w, i)) ++n;
  }
  return n;
}

}  // namespace

const char* outcome_name(EpisodeOutcome o) {
  switch (o) {
    case EpisodeOutcome::Running: return "Running";
    case EpisodeOutcome::Success: return "Success";
    case EpisodeOutcome::FailDisplaced: return "FailDisplaced";
    case EpisodeOutcome::FailWorkspace: return "FailWorkspace";
    case EpisodeOutcome::Timeout: return "Timeout";
  }
  return "?";
}

TaskSpec object_sampler(const std::string& family, Rng& rng) {
  if (family == "pretrain") {
    TaskSpec t;
    t.family = family;
    t.radius = rng.uniform(0.8f, 1.2f);
    t.mass = rng.uniform(0.8f, 1.2f);
    t.pose_range = 2.0f;
    t.pose_seed = static_cast<std::uint64_t>(rng.uniform_index(1u << 30));
    return t;
  }
  // Fixed held-out objects; every spec leaves the pretrain ranges in at
  // least one coordinate (radius outside [0.8, 1.2], nonzero estimate bias).
  struct Row {
    float radius, mass, bias_x, bias_y;
  };
  static constexpr Row kHeldout[] = {
      {1.45f, 1.0f, 1.5f, 0.0f},  {1.50f, 0.9f, 0.0f, 1.5f},
      {0.55f, 1.1f, -1.4f, 0.0f}, {1.40f, 1.6f, 0.0f, -1.3f},
      {0.60f, 0.7f, 1.1f, 1.1f},  {1.55f, 1.3f, -1.0f, 1.0f},
      {0.50f, 1.4f, 1.3f, -0.9f},
  };
  constexpr std::size_t kNumHeldout = sizeof(kHeldout) / sizeof(kHeldout[0]);
  for (std::size_t i = 0; i < kNumHeldout; ++i) {
    if (family == "heldout_" + std::to_string(i)) {
      TaskSpec t;
      t.family = family;
      t.radius = kHeldout[i].radius;
      t.mass = kHeldout[i].mass;
      t.pose_range = 2.0f;
      t.estimate_bias_x = kHeldout[i].bias_x;
      t.estimate_bias_y = kHeldout[i].bias_y;
      t.pose_seed = 1000 + i;
      return t;
    }
  }
  throw ConfigError("object_sampler: unknown task family '" + family +
                    "' (want pretrain or heldout_0..heldout_" +
                    std::to_string(kNumHeldout - 1) + ")");
}

void tip_position(const GraspWorld& w, std::size_t finger, float* tx, float* ty) {
  const float closure = w.joints[finger];
  const float ring = kTipRingOpen - (kTipRingOpen - kTipRingClosed) * closure;
  const float angle =
      w.theta + kTwoPi * static_cast<float>(finger) / static_cast<float>(w.cfg.fingers);
  *tx = w.x + ring * std::cos(angle);
  *ty = w.y + ring * std::sin(angle);
}

bool finger_in_contact(const GraspWorld& w, std::size_t finger) {
  if (w.cfg.reach_only) return false;
  if (std::fabs(w.z - w.oz) > kContactZRange) return false;
  float tx, ty;
  tip_position(w, finger, &tx, &ty);
  const float gap = planar_dist(tx, ty, w.ox, w.oy) - w.task.radius;
  return std::fabs(gap) <= kContactBand;
}

Tensor Observation::flatten() const {
  Tensor out({flare.size() + tactile.size() + pose.size() + joints.size() +
              estimate.size()});
  std::size_t k = 0;
  for (float v : flare) out.data[k++] = v;
  for (float v : tactile) out.data[k++] = v;
  for (float v : pose) out.data[k++] = v;
  for (float v : joints) out.data[k++] = v;
  for (float v : estimate) out.data[k++] = v;
  return out;
}

std::size_t feature_frame_dim(std::size_t fingers) { return 4 + fingers; }

std::size_t observation_dim(std::size_t fingers) {
  return 3 * feature_frame_dim(fingers) + fingers + 4 + fingers + 2;
}

std::vector<float> flare_stack(const std::vector<float>& f_t,
                               const std::vector<float>& f_tm1,
                               const std::vector<float>& f_tm2) {
  if (f_t.size() != f_tm1.size() || f_t.size() != f_tm2.size()) {
    throw DimensionError("flare_stack: frame lengths differ (" +
                         std::to_string(f_t.size()) + ", " +
                         std::to_string(f_tm1.size()) + ", " +
                         std::to_string(f_tm2.size()) + ")");
  }
  std::vector<float> out(3 * f_t.size());
  for (std::size_t i = 0; i < f_t.size(); ++i) {
    out[i] = f_t[i];
    out[f_t.size() + i] = f_t[i] - f_tm1[i];
    out[2 * f_t.size() + i] = f_tm1[i] - f_tm2[i];
  }
  return out;
}

std::vector<float> env_feature_frame(const GraspWorld& w) {
  std::vector<float> f(feature_frame_dim(w.cfg.fingers));
  f[0] = w.ox - w.x;
  f[1] = w.oy - w.y;
  f[2] = w.oz - w.z;
  f[3] = w.task.radius;
  for (std::size_t i = 0; i < w.cfg.fingers; ++i) {
    float tx, ty;
    tip_position(w, i, &tx, &ty);
    f[4 + i] = planar_dist(tx, ty, w.ox, w.oy) - w.task.radius;
  }
  if (w.cfg.obs_noise_sigma > 0.0f) {
    // Keyed on (episode, step): recomputing the frame for the same world
    // state yields bit-identical noise.
    Rng noise(derive_seed(w.noise_seed + 0x9e3779b97f4a7c15ULL * w.step_count,
                          "feature-noise"));
    for (float& v : f) v += noise.normal(0.0f, w.cfg.obs_noise_sigma);
  }
  return f;
}

RewardComponents reward_compute(const GraspWorld& w) {
  RewardComponents r;
  const float d = planar_dist(w.x, w.y, w.est_x, w.est_y);
  const float d0 = std::max(w.d0, 1e-6f);
  r.r_dist = 1.0f - std::min(d / d0, 1.0f);
  int n = 0;
  for (bool c : w.contacts) n += c ? 1 : 0;
  r.r_contact = static_cast<float>(n) / static_cast<float>(w.cfg.fingers);
  r.r_height = std::min(w.oz / kLiftSuccess, 1.0f);
  switch (w.outcome) {
    case EpisodeOutcome::Success: r.r_terminal = 10.0f; break;
    case EpisodeOutcome::FailDisplaced:
    case EpisodeOutcome::FailWorkspace: r.r_terminal = -1.0f; break;
    default: r.r_terminal = 0.0f;
  }
  r.total = 0.1f * r.r_dist + 0.3f * r.r_contact + 0.6f * r.r_height + r.r_terminal;
  return r;
}

GraspEnv::GraspEnv(EnvConfig cfg) : cfg_(cfg) { validate_env_config(cfg_); }

Observation GraspEnv::reset(std::uint64_t episode_seed, const TaskSpec& task) {
  if (!(task.radius > 0.0f) || !(task.mass > 0.0f) || !(task.pose_range >= 0.0f)) {
    throw ConfigError("GraspEnv::reset: task radius/mass must be positive");
  }
  if (task.grasp_generator != 0) {
    throw ConfigError("GraspEnv::reset: unknown grasp generator id " +
                      std::to_string(task.grasp_generator));
  }
  Rng ep(derive_seed(episode_seed ^ (task.pose_seed * 0x9e3779b97f4a7c15ULL),
                     "episode"));

  world_ = GraspWorld{};
  world_.cfg = cfg_;
  world_.task = task;
  world_.joints.assign(cfg_.fingers, 0.0f);
  world_.contacts.assign(cfg_.fingers, false);
  world_.noise_seed = derive_seed(episode_seed, "obs-noise");

  world_.ox = ep.uniform(-task.pose_range, task.pose_range);
  world_.oy = ep.uniform(-task.pose_range, task.pose_range);
  world_.oz = 0.0f;
  world_.ox0 = world_.ox;
  world_.oy0 = world_.oy;

  // Pre-grasp: the effector starts a fixed (jittered) distance from the
  // grasp pose, facing the object, fingers open.
  const float approach = ep.uniform(0.0f, kTwoPi);
  const float dist = kPregraspDistance + ep.uniform(-kPregraspJitter, kPregraspJitter);
  world_.x = clampf(world_.ox + dist * std::cos(approach), -kWorkspaceXY, kWorkspaceXY);
  world_.y = clampf(world_.oy + dist * std::sin(approach), -kWorkspaceXY, kWorkspaceXY);
  world_.z = kStartHeight;
  world_.theta = approach + 0.5f * kTwoPi;

  world_.est_x = world_.ox + task.estimate_bias_x + ep.normal(0.0f, kEstimateNoise);
  world_.est_y = world_.oy + task.estimate_bias_y + ep.normal(0.0f, kEstimateNoise);
  world_.d0 = planar_dist(world_.x, world_.y, world_.est_x, world_.est_y);

  frame_t_ = env_feature_frame(world_);
  frame_tm1_ = frame_t_;  // primed history: Flare differences start at zero
  frame_tm2_ = frame_t_;
  has_episode_ = true;
  return observe();
}

GraspEnv::StepResult GraspEnv::step(const Tensor& action) {
  if (!has_episode_) throw StateError("GraspEnv::step: reset() has not been called");
  if (world_.outcome != EpisodeOutcome::Running) {
    throw StateError(std::string("GraspEnv::step: episode already ended (") +
                     outcome_name(world_.outcome) + ")");
  }
  const std::size_t want = action_dim();
  if (action.dims.size() != 1 || action.dims[0] != want) {
    throw DimensionError("GraspEnv::step: action must be [" + std::to_string(want) +
                         "], got " + action.shape_str());
  }
  require_finite(action, "GraspEnv::step action");

  world_.step_count += 1;

  // Commanded pose; leaving the workspace box fails immediately and the
  // command is not applied.
  const float nx = world_.x + kCapTranslation * clampf(action.data[0], -1.0f, 1.0f);
  const float ny = world_.y + kCapTranslation * clampf(action.data[1], -1.0f, 1.0f);
  const float nz = world_.z + kCapTranslation * clampf(action.data[2], -1.0f, 1.0f);
  const float ntheta = world_.theta + kCapRotation * clampf(action.data[3], -1.0f, 1.0f);
  if (std::fabs(nx) > kWorkspaceXY || std::fabs(ny) > kWorkspaceXY || nz < 0.0f ||
      nz > kWorkspaceZMax) {
    world_.outcome = EpisodeOutcome::FailWorkspace;
  } else {
    world_.x = nx;
    world_.y = ny;
    world_.z = nz;
    world_.theta = ntheta;

    if (!cfg_.reach_only) {
      // Fingers: a touching finger cannot close further (the rim is rigid)
      // but may always reopen.
      for (std::size_t i = 0; i < cfg_.fingers; ++i) {
        float dc = kCapJoint * clampf(action.data[4 + i], -1.0f, 1.0f);
        if (dc > 0.0f && finger_in_contact(world_, i)) dc = 0.0f;
        world_.joints[i] = clampf(world_.joints[i] + dc, 0.0f, 1.0f);
      }

      // Object resolution.  A held object moves with the hand first (the
      // hand-to-object pose is locked, so carrying preserves every rim gap);
      // only reopening the fingers can release it.  With fewer than two
      // contacts, loose deep-penetrating tips shove the disk instead.
      if (world_.grasped) {
        world_.ox = world_.x + world_.grab_dx;
        world_.oy = world_.y + world_.grab_dy;
        world_.oz = std::max(0.0f, world_.z - world_.grab_dz);
        if (count_contacts(world_) < 2) {
          world_.grasped = false;  // dropped: the object falls to the table
          world_.oz = 0.0f;
        }
      }
      if (!world_.grasped) {
        if (count_contacts(world_) >= 2) {
          world_.grasped = true;  // fresh grasp: lock the relative pose
          world_.grab_dx = world_.ox - world_.x;
          world_.grab_dy = world_.oy - world_.y;
          world_.grab_dz = world_.z - world_.oz;
        }
      }
      if (!world_.grasped) {
        float push_x = 0.0f, push_y = 0.0f;
        for (std::size_t i = 0; i < cfg_.fingers; ++i) {
          if (!finger_penetrates(world_, i)) continue;
          float tx, ty;
          tip_position(world_, i, &tx, &ty);
          float dx = world_.ox - tx;
          float dy = world_.oy - ty;
          const float norm = std::sqrt(dx * dx + dy * dy);
          if (norm < 1e-6f) {
            dx = 1.0f;
            dy = 0.0f;
          } else {
            dx /= norm;
            dy /= norm;
          }
          const float mag = kPushStep / world_.task.mass;
          push_x += mag * dx;
          push_y += mag * dy;
        }
        world_.ox += push_x;
        world_.oy += push_y;
      }

      if (planar_dist(world_.ox, world_.oy, world_.ox0, world_.oy0) > kDisplaceFail) {
        world_.outcome = EpisodeOutcome::FailDisplaced;
      }

      // Contacts against the resolved object pose feed tactile, reward and
      // the phase label.
      for (std::size_t i = 0; i < cfg_.fingers; ++i) {
        world_.contacts[i] = finger_in_contact(world_, i);
      }
      const int n = count_contacts(world_);
      world_.phase = n >= 2 ? Phase::Lifting
                            : (n == 1 ? Phase::Closing : Phase::Approach);

      if (world_.outcome == EpisodeOutcome::Running && world_.grasped &&
          world_.oz >= kLiftSuccess) {
        world_.outcome = EpisodeOutcome::Success;
      }
    } else {
      if (planar_dist(world_.x, world_.y, world_.ox, world_.oy) <= kReachTolerance) {
        world_.outcome = EpisodeOutcome::Success;
      }
    }
  }

  if (world_.outcome == EpisodeOutcome::Running &&
      world_.step_count >= cfg_.max_steps) {
    world_.outcome = EpisodeOutcome::Timeout;
  }

  StepResult result;
  result.reward = reward_compute(world_);
  result.outcome = world_.outcome;

  frame_tm2_ = frame_tm1_;
  frame_tm1_ = frame_t_;
  frame_t_ = env_feature_frame(world_);
  result.obs = observe();
  return result;
}

Observation GraspEnv::observe() const {
  Observation obs;
  obs.flare = flare_stack(frame_t_, frame_tm1_, frame_tm2_);
  obs.tactile.resize(cfg_.fingers);
  for (std::size_t i = 0; i < cfg_.fingers; ++i) {
    obs.tactile[i] = world_.contacts[i] ? 1.0f : 0.0f;
  }
  obs.pose = {world_.x, world_.y, world_.z, world_.theta};
  obs.joints = world_.joints;
  obs.estimate = {world_.est_x, world_.est_y};
  return obs;
}

}  // namespace resprect
