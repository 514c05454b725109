#pragma once

#include <cmath>
#include <cstdint>

#include "resprect/adam.hpp"
#include "resprect/mlp.hpp"
#include "resprect/replay.hpp"
#include "resprect/rng.hpp"
#include "resprect/tensor.hpp"

namespace resprect {

/// Soft actor-critic with an additive action pipeline.  The executed action
/// is always clip(a_pre + residual_scale * a, [-1,1]); a plain agent is the
/// special case a_pre = 0, residual_scale = 1 (the clip is then a no-op on
/// tanh outputs).  A residual agent additionally appends a_pre to the
/// actor's observation.  Critics always score (obs, executed action), which
/// keeps their signature identical between plain and residual agents — that
/// is what makes copying a pretrained critic into a residual learner legal.
struct SacConfig {
  std::size_t obs_dim = 0;
  std::size_t action_dim = 0;
  std::size_t hidden = 256;

  bool residual = false;
  float residual_scale = 1.0f;
  /// Residual actors start with a zeroed output layer so the correction is
  /// exactly zero before the first update.
  bool zero_head_actor = false;

  float lr = 3e-4f;
  float gamma = 0.99f;
  float tau = 0.005f;
  std::size_t target_update_interval = 1;
  std::size_t batch_size = 256;
  std::size_t gradient_steps = 10;
  std::size_t training_frequency = 10;

  float init_entropy_coef = 0.01f;
  bool fixed_alpha = false;
  float target_entropy = 0.0f;

  float log_std_min = -20.0f;
  float log_std_max = 2.0f;

  std::size_t actor_input_dim() const {
    return obs_dim + (residual ? action_dim : 0);
  }
  std::size_t critic_input_dim() const { return obs_dim + action_dim; }
};

/// Everything that learns: actor, twin critics, their Polyak targets, the
/// three optimizers and the log entropy coefficient.
struct AgentBundle {
  SacConfig cfg;
  ParamSet actor;
  ParamSet critic1, critic2;
  ParamSet target1, target2;
  AdamState actor_opt, critic1_opt, critic2_opt;
  float log_alpha = 0.0f;
  ScalarAdamState alpha_opt;
  std::uint64_t update_count = 0;

  float alpha() const { return std::exp(log_alpha); }
};

AgentBundle make_agent(const SacConfig& cfg, std::uint64_t seed);

/// clip(pre + scale * a, [-1,1]) elementwise; `pre` and `a` are [B, A].
Tensor compose_action(const Tensor& pre, const Tensor& a, float scale);

/// One reparameterised draw from the tanh-squashed Gaussian policy, with
/// everything the backward pass needs retained.
struct SquashedSample {
  Tensor a;            // tanh(mean + sigma * noise), [B, A]
  Tensor mean;         // [B, A]
  Tensor log_std_raw;  // pre-clamp network output, [B, A]
  Tensor sigma;        // exp(clamped log_std), [B, A]
  Tensor noise;        // standard normal draws, [B, A]
  Tensor log_prob;     // summed over action dims, [B]
  MlpTrace trace;      // actor forward trace
};

SquashedSample squashed_gaussian_sample(const ParamSet& actor,
                                        const Tensor& actor_input, Rng& rng,
                                        const SacConfig& cfg);

/// tanh of the policy mean; the noise-free action used for evaluation.
Tensor deterministic_action(const ParamSet& actor, const Tensor& actor_input,
                            const SacConfig& cfg);

/// Bootstrapped regression targets
///   y = r + gamma * (1 - done) * (min_i targetQ_i(s', a'_total) - alpha * log pi(a'|s'))
/// with a' freshly sampled from the current actor.  `done` is 0/1 and must
/// already exclude time-limit truncation.  Uses the agent's entropy
/// coefficient as it is when called; the training round therefore computes
/// targets before stepping log_alpha.
Tensor critic_target(const AgentBundle& agent, const Tensor& next_obs,
                     const Tensor& a_pre_next, const Tensor& reward,
                     const Tensor& done, Rng& rng);

struct CriticLossResult {
  float loss = 0.0f;
  ParamSet grads;
};

/// Mean squared error of one critic against fixed targets y, with parameter
/// gradients; obs_action is the composed (s, a_total) batch.
CriticLossResult critic_loss_grads(const ParamSet& critic,
                                   const Tensor& obs_action, const Tensor& y);

/// Applies one Adam step per critic toward targets y.  Returns the two loss
/// values (before the step).
struct CriticUpdateResult {
  float loss1 = 0.0f;
  float loss2 = 0.0f;
};
CriticUpdateResult critic_update(AgentBundle& agent, const Tensor& obs,
                                 const Tensor& action_taken, const Tensor& y);

struct ActorLossResult {
  float loss = 0.0f;
  ParamSet grads;
};

/// L = mean(alpha * log pi(a|s) - min_i Q_i(s, a_total)) for a reparameterised
/// sample, with gradients through the composition clip, the tanh squash and
/// the log_std clamp.  The critics are differentiated through as functions of
/// the action but their parameters receive no update here.
ActorLossResult actor_loss_grads(const ParamSet& actor, const ParamSet& critic1,
                                 const ParamSet& critic2, const Tensor& obs,
                                 const Tensor& a_pre,
                                 const SquashedSample& sample, float alpha,
                                 const SacConfig& cfg);

/// One Adam step on the actor.  Returns the loss.
float actor_update(AgentBundle& agent, const Tensor& obs, const Tensor& a_pre,
                   const SquashedSample& sample, float alpha);

struct AlphaLossResult {
  float loss = 0.0f;
  float grad = 0.0f;  // dLoss/dlog_alpha
};

/// L = -log_alpha * mean(log pi + target_entropy); log probabilities are
/// treated as constants.
AlphaLossResult alpha_loss_grad(float log_alpha, const Tensor& log_probs,
                                float target_entropy);

/// One scalar Adam step on log_alpha (no-op when cfg.fixed_alpha).
float alpha_update(AgentBundle& agent, const Tensor& log_probs);

/// target <- (1 - tau) * target + tau * source, elementwise.
void soft_update(ParamSet& target, const ParamSet& source, float tau);

struct UpdateStats {
  float critic1_loss = 0.0f;
  float critic2_loss = 0.0f;
  float actor_loss = 0.0f;
  float alpha_loss = 0.0f;
  float alpha = 0.0f;
  float mean_log_prob = 0.0f;
  std::size_t gradient_steps = 0;
};

/// One training round: cfg.gradient_steps sampled minibatch updates, each
/// running alpha -> critics -> actor -> Polyak in that order with the
/// entropy coefficient captured at the top of the step.  Returned stats are
/// means over the round.
UpdateStats sac_train_iteration(AgentBundle& agent, ReplayBuffer& replay,
                                Rng& rng);

}  // namespace resprect
