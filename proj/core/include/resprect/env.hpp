#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "resprect/rng.hpp"
#include "resprect/tensor.hpp"

namespace resprect {

/// Toy multi-fingered grasping world: a planar effector with a height axis
/// and F radially mounted fingertips must reach a disk-shaped object, close
/// until at least two tips touch the rim, and lift it 10 units.  Everything
/// is kinematic and deterministic; there is no physics beyond "pushing an
/// ungrasped object displaces it".

// Geometry and limits (world units).
inline constexpr float kWorkspaceXY = 12.0f;   // |x|,|y| must stay inside
inline constexpr float kWorkspaceZMax = 15.0f;
inline constexpr float kPregraspDistance = 5.0f;
inline constexpr float kPregraspJitter = 0.25f;
inline constexpr float kEstimateNoise = 0.1f;  // sigma of the pose estimate
inline constexpr float kTipRingOpen = 2.0f;    // fingertip ring radius, open
inline constexpr float kTipRingClosed = 0.2f;
inline constexpr float kContactBand = 0.3f;    // |tip-to-rim| for a touch
inline constexpr float kContactZRange = 2.0f;  // max |z - object z| for touch
inline constexpr float kLiftSuccess = 10.0f;
inline constexpr float kDisplaceFail = 3.0f;
inline constexpr float kReachTolerance = 1.0f;  // reach-only success radius
inline constexpr float kCapTranslation = 0.2f;  // per-step offset caps
inline constexpr float kCapRotation = 0.1f;
inline constexpr float kCapJoint = 0.1f;
inline constexpr float kPushStep = 0.1f;  // displacement per penetrating tip
inline constexpr float kStartHeight = 1.0f;

struct EnvConfig {
  std::size_t fingers = 3;
  std::size_t max_steps = 100;
  float obs_noise_sigma = 0.01f;
  /// Point-mass variant: contacts, fingers and the object are inert; the
  /// episode succeeds when the effector reaches the true object position.
  bool reach_only = false;
};

/// Object + episode parameters.  A task plus an episode seed fully
/// determines the episode.
struct TaskSpec {
  std::string family = "pretrain";
  float radius = 1.0f;       // object disk radius
  float mass = 1.0f;         // resists pushing: displacement scales by 1/mass
  float pose_range = 2.0f;   // object center ~ U(-range, range)^2
  float estimate_bias_x = 0.0f;  // systematic estimate offset (held-out tasks)
  float estimate_bias_y = 0.0f;
  std::uint64_t pose_seed = 0;   // folded into the episode seed
  int grasp_generator = 0;       // pre-grasp approach pattern
};

/// Samples a pretrain task from the broad training ranges, or returns one of
/// the fixed held-out specs ("heldout_0" .. "heldout_6"), each of which sits
/// outside the pretrain ranges in at least one coordinate.
TaskSpec object_sampler(const std::string& family, Rng& rng);

enum class EpisodeOutcome { Running, Success, FailDisplaced, FailWorkspace, Timeout };
enum class Phase { Approach, Closing, Lifting };

const char* outcome_name(EpisodeOutcome o);

/// True when the outcome ends the MDP (success or genuine failure) as
/// opposed to a time-limit truncation, which bootstraps.
inline bool outcome_is_terminal(EpisodeOutcome o) {
  return o == EpisodeOutcome::Success || o == EpisodeOutcome::FailDisplaced ||
         o == EpisodeOutcome::FailWorkspace;
}

struct RewardComponents {
  float r_dist = 0.0f;      // 1 - min(d/d0, 1), d to the *estimate*
  float r_contact = 0.0f;   // touching fingers / F
  float r_height = 0.0f;    // min(lift / 10, 1)
  float r_terminal = 0.0f;  // +10 success, -1 genuine failure, else 0
  float total = 0.0f;       // 0.1 r_dist + 0.3 r_contact + 0.6 r_height + r_terminal
};

/// Full simulator state.  Learning code must not read this directly — it is
/// privileged (true object pose); only the scripted demonstrator and tests do.
struct GraspWorld {
  EnvConfig cfg;
  TaskSpec task;

  float x = 0, y = 0, z = 0, theta = 0;  // effector pose
  std::vector<float> joints;             // closure per finger, [0,1]

  float ox = 0, oy = 0, oz = 0;  // object pose
  float ox0 = 0, oy0 = 0;        // object start (displacement reference)

  bool grasped = false;
  float grab_dx = 0, grab_dy = 0, grab_dz = 0;  // hand-to-object lock offsets

  float est_x = 0, est_y = 0;  // fixed per-episode object estimate
  float d0 = 1.0f;             // effector-to-estimate distance at reset

  Phase phase = Phase::Approach;
  EpisodeOutcome outcome = EpisodeOutcome::Running;
  std::size_t step_count = 0;
  std::vector<bool> contacts;
  std::uint64_t noise_seed = 0;
};

/// Fingertip position in the world plane.
void tip_position(const GraspWorld& w, std::size_t finger, float* tx, float* ty);

/// Geometric touch predicate for one finger against the object rim.
bool finger_in_contact(const GraspWorld& w, std::size_t finger);

struct Observation {
  std::vector<float> flare;     // 3L Flare block over feature frames
  std::vector<float> tactile;   // F binary values
  std::vector<float> pose;      // x, y, z, theta
  std::vector<float> joints;    // F closures
  std::vector<float> estimate;  // fixed per-episode object estimate

  /// Flat layout: [flare | tactile | pose | joints | estimate].
  Tensor flatten() const;
};

/// Per-finger feature frame length: 3 relative offsets + extent + F gaps.
std::size_t feature_frame_dim(std::size_t fingers);
std::size_t observation_dim(std::size_t fingers);

/// [f_t | f_t - f_tm1 | f_tm1 - f_tm2]; all inputs must share a length.
std::vector<float> flare_stack(const std::vector<float>& f_t,
                               const std::vector<float>& f_tm1,
                               const std::vector<float>& f_tm2);

/// Low-dimensional scene descriptor: object offsets relative to the
/// effector, object extent, per-fingertip rim gaps; plus per-episode
/// observation noise keyed on (episode, step) so recomputation is
/// idempotent.
std::vector<float> env_feature_frame(const GraspWorld& w);

class GraspEnv {
 public:
  explicit GraspEnv(EnvConfig cfg);

  Observation reset(std::uint64_t episode_seed, const TaskSpec& task);

  struct StepResult {
    Observation obs;
    RewardComponents reward;
    EpisodeOutcome outcome = EpisodeOutcome::Running;
  };
  /// action: [dx, dy, dz, dtheta, djoint_1..djoint_F] in [-1,1], scaled by
  /// the per-component caps.  Throws StateError once the episode is over.
  StepResult step(const Tensor& action);

  const GraspWorld& world() const { return world_; }
  std::size_t action_dim() const { return 4 + cfg_.fingers; }
  std::size_t obs_dim() const { return observation_dim(cfg_.fingers); }
  const EnvConfig& config() const { return cfg_; }

 private:
  Observation observe() const;

  EnvConfig cfg_;
  GraspWorld world_;
  bool has_episode_ = false;
  std::vector<float> frame_t_, frame_tm1_, frame_tm2_;
};

/// Reward of the current world state (phase-pure: no side effects).
RewardComponents reward_compute(const GraspWorld& w);

}  // namespace resprect
