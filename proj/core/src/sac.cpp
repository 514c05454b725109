#include "resprect/sac.hpp"

#include <cmath>

#include "resprect/errors.hpp"

namespace resprect {

namespace {

constexpr float kLogSqrt2Pi = 0.9189385332046727f;  // 0.5 * log(2*pi)
constexpr float kTanhEps = 1e-6f;

void validate_config(const SacConfig& cfg) {
  if (cfg.obs_dim == 0 || cfg.action_dim == 0) {
    throw ConfigError("SacConfig: obs_dim and action_dim must be positive");
  }
  if (cfg.hidden == 0) throw ConfigError("SacConfig: hidden must be positive");
  if (!(cfg.gamma >= 0.0f && cfg.gamma <= 1.0f)) {
    throw ConfigError("SacConfig: gamma must lie in [0,1]");
  }
  if (!(cfg.tau > 0.0f && cfg.tau <= 1.0f)) {
    throw ConfigError("SacConfig: tau must lie in (0,1]");
  }
  if (cfg.log_std_min >= cfg.log_std_max) {
    throw ConfigError("SacConfig: log_std bounds are inverted");
  }
}

void require_batch(const Tensor& t, std::size_t batch, std::size_t dim,
                   const char* label) {
  if (t.rank() != 2 || t.dims[0] != batch || t.dims[1] != dim) {
    throw DimensionError(std::string(label) + ": expected [" +
                         std::to_string(batch) + "," + std::to_string(dim) +
                         "], got " + t.shape_str());
  }
}

void require_vec(const Tensor& t, std::size_t batch, const char* label) {
  if (t.rank() != 1 || t.dims[0] != batch) {
    throw DimensionError(std::string(label) + ": expected [" +
                         std::to_string(batch) + "], got " + t.shape_str());
  }
}

std::size_t batch_rows(const Tensor& t, const char* label) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(label) + ": expected a rank-2 batch, got " +
                         t.shape_str());
  }
  return t.dims[0];
}

}  // namespace

AgentBundle make_agent(const SacConfig& cfg, std::uint64_t seed) {
  validate_config(cfg);
  AgentBundle agent;
  agent.cfg = cfg;

  Rng actor_rng(derive_seed(seed, "actor-init"));
  Rng critic1_rng(derive_seed(seed, "critic1-init"));
  Rng critic2_rng(derive_seed(seed, "critic2-init"));

  agent.actor = mlp_init({cfg.actor_input_dim(), cfg.hidden, 2 * cfg.action_dim},
                         actor_rng, cfg.zero_head_actor);
  agent.critic1 = mlp_init({cfg.critic_input_dim(), cfg.hidden, 1}, critic1_rng);
  agent.critic2 = mlp_init({cfg.critic_input_dim(), cfg.hidden, 1}, critic2_rng);
  agent.target1 = agent.critic1;
  agent.target2 = agent.critic2;

  const AdamConfig opt{cfg.lr, 0.9f, 0.999f, 1e-8f};
  agent.actor_opt = adam_init(agent.actor, opt);
  agent.critic1_opt = adam_init(agent.critic1, opt);
  agent.critic2_opt = adam_init(agent.critic2, opt);

  if (!(cfg.init_entropy_coef > 0.0f)) {
    throw ConfigError("SacConfig: init_entropy_coef must be positive");
  }
  agent.log_alpha = std::log(cfg.init_entropy_coef);
  agent.alpha_opt.cfg = opt;
  return agent;
}

Tensor compose_action(const Tensor& pre, const Tensor& a, float scale) {
  if (!pre.same_shape(a)) {
    throw DimensionError("compose_action: shape mismatch " + pre.shape_str() +
                         " vs " + a.shape_str());
  }
  Tensor out = pre;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    float v = pre.data[i] + scale * a.data[i];
    if (v < -1.0f) v = -1.0f;
    if (v > 1.0f) v = 1.0f;
    out.data[i] = v;
  }
  return out;
}

SquashedSample squashed_gaussian_sample(const ParamSet& actor,
                                        const Tensor& actor_input, Rng& rng,
                                        const SacConfig& cfg) {
  const std::size_t B = batch_rows(actor_input, "actor_input");
  const std::size_t A = cfg.action_dim;
  require_batch(actor_input, B, cfg.actor_input_dim(), "actor_input");

  SquashedSample s;
  Tensor out = mlp_forward(actor, actor_input, &s.trace);
  if (out.dims[1] != 2 * A) {
    throw DimensionError("squashed_gaussian_sample: actor head is " +
                         out.shape_str() + ", expected 2*action_dim");
  }
  s.mean = Tensor({B, A});
  s.log_std_raw = Tensor({B, A});
  s.sigma = Tensor({B, A});
  s.noise = Tensor({B, A});
  s.a = Tensor({B, A});
  s.log_prob = Tensor({B});

  for (std::size_t b = 0; b < B; ++b) {
    float lp = 0.0f;
    for (std::size_t d = 0; d < A; ++d) {
      const float mean = out.at(b, d);
      const float raw = out.at(b, A + d);
      float clamped = raw;
      if (clamped < cfg.log_std_min) clamped = cfg.log_std_min;
      if (clamped > cfg.log_std_max) clamped = cfg.log_std_max;
      const float sigma = std::exp(clamped);
      const float z = static_cast<float>(rng.normal());
      const float u = mean + sigma * z;
      const float a = std::tanh(u);

      s.mean.at(b, d) = mean;
      s.log_std_raw.at(b, d) = raw;
      s.sigma.at(b, d) = sigma;
      s.noise.at(b, d) = z;
      s.a.at(b, d) = a;
      lp += -0.5f * z * z - clamped - kLogSqrt2Pi -
            std::log(1.0f - a * a + kTanhEps);
    }
    s.log_prob.at(b) = lp;
  }
  return s;
}

Tensor deterministic_action(const ParamSet& actor, const Tensor& actor_input,
                            const SacConfig& cfg) {
  const std::size_t B = batch_rows(actor_input, "actor_input");
  const std::size_t A = cfg.action_dim;
  require_batch(actor_input, B, cfg.actor_input_dim(), "actor_input");
  Tensor out = mlp_forward(actor, actor_input);
  Tensor a({B, A});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t d = 0; d < A; ++d) a.at(b, d) = std::tanh(out.at(b, d));
  return a;
}

Tensor critic_target(const AgentBundle& agent, const Tensor& next_obs,
                     const Tensor& a_pre_next, const Tensor& reward,
                     const Tensor& done, Rng& rng) {
  const SacConfig& cfg = agent.cfg;
  const std::size_t B = batch_rows(next_obs, "next_obs");
  require_batch(next_obs, B, cfg.obs_dim, "next_obs");
  require_batch(a_pre_next, B, cfg.action_dim, "a_pre_next");
  require_vec(reward, B, "reward");
  require_vec(done, B, "done");

  const Tensor next_input =
      cfg.residual ? concat_cols(next_obs, a_pre_next) : next_obs;
  const SquashedSample ns =
      squashed_gaussian_sample(agent.actor, next_input, rng, cfg);
  const Tensor na_total =
      compose_action(a_pre_next, ns.a, cfg.residual_scale);
  const Tensor sa = concat_cols(next_obs, na_total);
  const Tensor q1 = mlp_forward(agent.target1, sa);
  const Tensor q2 = mlp_forward(agent.target2, sa);

  const float alpha = agent.alpha();
  Tensor y({B});
  for (std::size_t b = 0; b < B; ++b) {
    const float qmin = std::min(q1.at(b, 0), q2.at(b, 0));
    y.at(b) = reward.at(b) + cfg.gamma * (1.0f - done.at(b)) *
                                 (qmin - alpha * ns.log_prob.at(b));
  }
  return y;
}

CriticLossResult critic_loss_grads(const ParamSet& critic,
                                   const Tensor& obs_action, const Tensor& y) {
  const std::size_t B = batch_rows(obs_action, "critic obs_action");
  require_vec(y, B, "critic targets");

  MlpTrace trace;
  const Tensor q = mlp_forward(critic, obs_action, &trace);
  const float inv_b = 1.0f / static_cast<float>(B);

  CriticLossResult out;
  Tensor upstream({B, 1});
  for (std::size_t b = 0; b < B; ++b) {
    const float diff = q.at(b, 0) - y.at(b);
    out.loss += diff * diff * inv_b;
    upstream.at(b, 0) = 2.0f * diff * inv_b;
  }
  out.grads = mlp_backward(critic, trace, upstream).params;
  return out;
}

CriticUpdateResult critic_update(AgentBundle& agent, const Tensor& obs,
                                 const Tensor& action_taken, const Tensor& y) {
  const Tensor sa = concat_cols(obs, action_taken);
  CriticLossResult r1 = critic_loss_grads(agent.critic1, sa, y);
  CriticLossResult r2 = critic_loss_grads(agent.critic2, sa, y);
  adam_step(agent.critic1, r1.grads, agent.critic1_opt);
  adam_step(agent.critic2, r2.grads, agent.critic2_opt);
  return {r1.loss, r2.loss};
}

ActorLossResult actor_loss_grads(const ParamSet& actor, const ParamSet& critic1,
                                 const ParamSet& critic2, const Tensor& obs,
                                 const Tensor& a_pre,
                                 const SquashedSample& sample, float alpha,
                                 const SacConfig& cfg) {
  const std::size_t B = batch_rows(obs, "obs");
  const std::size_t A = cfg.action_dim;
  require_batch(obs, B, cfg.obs_dim, "obs");
  require_batch(a_pre, B, A, "a_pre");
  const float inv_b = 1.0f / static_cast<float>(B);

  const Tensor a_total = compose_action(a_pre, sample.a, cfg.residual_scale);
  const Tensor sa = concat_cols(obs, a_total);
  MlpTrace t1, t2;
  const Tensor q1 = mlp_forward(critic1, sa, &t1);
  const Tensor q2 = mlp_forward(critic2, sa, &t2);

  ActorLossResult out;
  Tensor up1({B, 1});
  Tensor up2({B, 1});
  for (std::size_t b = 0; b < B; ++b) {
    const float v1 = q1.at(b, 0), v2 = q2.at(b, 0);
    out.loss += (alpha * sample.log_prob.at(b) - std::min(v1, v2)) * inv_b;
    // min() routes the gradient to the smaller critic; ties go to the first.
    if (v1 <= v2) {
      up1.at(b, 0) = -inv_b;
    } else {
      up2.at(b, 0) = -inv_b;
    }
  }

  const Tensor gin1 = mlp_input_grad(critic1, t1, up1);
  const Tensor gin2 = mlp_input_grad(critic2, t2, up2);

  const std::size_t O = cfg.obs_dim;
  Tensor upstream_actor({B, 2 * A});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t d = 0; d < A; ++d) {
      const float g_total = gin1.at(b, O + d) + gin2.at(b, O + d);
      // Composition clip: gradient passes only while the sum is in range.
      const float v = a_pre.at(b, d) + cfg.residual_scale * sample.a.at(b, d);
      const float g_arl =
          (v >= -1.0f && v <= 1.0f) ? g_total * cfg.residual_scale : 0.0f;

      const float a = sample.a.at(b, d);
      const float tprime = 1.0f - a * a;          // dtanh
      const float denom = tprime + kTanhEps;      // matches log_prob's guard
      const float c = 2.0f * a * tprime / denom;  // dlogpi/du
      const float sz = sample.sigma.at(b, d) * sample.noise.at(b, d);

      const float gmean = g_arl * tprime + alpha * inv_b * c;
      float glogstd =
          g_arl * tprime * sz + alpha * inv_b * (-1.0f + c * sz);
      // log_std clamp: saturated outputs get no gradient.
      const float raw = sample.log_std_raw.at(b, d);
      if (raw < cfg.log_std_min || raw > cfg.log_std_max) glogstd = 0.0f;

      upstream_actor.at(b, d) = gmean;
      upstream_actor.at(b, A + d) = glogstd;
    }
  }
  out.grads = mlp_backward(actor, sample.trace, upstream_actor).params;
  return out;
}

float actor_update(AgentBundle& agent, const Tensor& obs, const Tensor& a_pre,
                   const SquashedSample& sample, float alpha) {
  ActorLossResult r =
      actor_loss_grads(agent.actor, agent.critic1, agent.critic2, obs, a_pre,
                       sample, alpha, agent.cfg);
  adam_step(agent.actor, r.grads, agent.actor_opt);
  return r.loss;
}

AlphaLossResult alpha_loss_grad(float log_alpha, const Tensor& log_probs,
                                float target_entropy) {
  float mean = 0.0f;
  for (float lp : log_probs.data) mean += lp + target_entropy;
  mean /= static_cast<float>(log_probs.size());
  return {-log_alpha * mean, -mean};
}

float alpha_update(AgentBundle& agent, const Tensor& log_probs) {
  const AlphaLossResult r =
      alpha_loss_grad(agent.log_alpha, log_probs, agent.cfg.target_entropy);
  if (!agent.cfg.fixed_alpha) {
    adam_step_scalar(agent.log_alpha, r.grad, agent.alpha_opt);
  }
  return r.loss;
}

void soft_update(ParamSet& target, const ParamSet& source, float tau) {
  if (!target.same_layout(source)) {
    throw DimensionError("soft_update: target/source layouts disagree");
  }
  for (std::size_t e = 0; e < target.entries.size(); ++e) {
    float* t = target.entries[e].value.data.data();
    const float* s = source.entries[e].value.data.data();
    const std::size_t n = target.entries[e].value.size();
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = (1.0f - tau) * t[i] + tau * s[i];
    }
  }
}

UpdateStats sac_train_iteration(AgentBundle& agent, ReplayBuffer& replay,
                                Rng& rng) {
  const SacConfig& cfg = agent.cfg;
  const std::size_t B = cfg.batch_size;
  const std::size_t O = cfg.obs_dim;
  const std::size_t A = cfg.action_dim;

  UpdateStats stats;
  stats.gradient_steps = cfg.gradient_steps;
  const float inv_steps = 1.0f / static_cast<float>(cfg.gradient_steps);

  for (std::size_t g = 0; g < cfg.gradient_steps; ++g) {
    const std::vector<std::size_t> idx = replay.sample_indices(B);
    Tensor obs({B, O}), act({B, A}), next_obs({B, O});
    Tensor a_pre({B, A}), a_pre_next({B, A});
    Tensor reward({B}), done({B});
    for (std::size_t b = 0; b < B; ++b) {
      const Transition& tr = replay.at(idx[b]);
      if (tr.obs.size() != O || tr.action.size() != A ||
          tr.next_obs.size() != O || tr.a_pre.size() != A ||
          tr.a_pre_next.size() != A) {
        throw DimensionError("sac_train_iteration: stored transition does not "
                             "match agent dims");
      }
      for (std::size_t j = 0; j < O; ++j) {
        obs.at(b, j) = tr.obs.data[j];
        next_obs.at(b, j) = tr.next_obs.data[j];
      }
      for (std::size_t j = 0; j < A; ++j) {
        act.at(b, j) = tr.action.data[j];
        a_pre.at(b, j) = tr.a_pre.data[j];
        a_pre_next.at(b, j) = tr.a_pre_next.data[j];
      }
      reward.at(b) = tr.reward;
      done.at(b) = tr.done ? 1.0f : 0.0f;
    }

    const Tensor actor_input = cfg.residual ? concat_cols(obs, a_pre) : obs;
    const SquashedSample sample =
        squashed_gaussian_sample(agent.actor, actor_input, rng, cfg);

    // The critic target and actor loss both use the entropy coefficient as
    // of the top of this gradient step, so compute targets before stepping
    // log_alpha and hand the captured value to the actor update.
    const float alpha_old = agent.alpha();
    const Tensor y =
        critic_target(agent, next_obs, a_pre_next, reward, done, rng);
    float alpha_loss = 0.0f;
    if (!cfg.fixed_alpha) alpha_loss = alpha_update(agent, sample.log_prob);
    const Tensor a_total = compose_action(a_pre, act, cfg.residual_scale);
    const CriticUpdateResult cr = critic_update(agent, obs, a_total, y);
    const float actor_loss =
        actor_update(agent, obs, a_pre, sample, alpha_old);

    agent.update_count += 1;
    if (agent.update_count % cfg.target_update_interval == 0) {
      soft_update(agent.target1, agent.critic1, cfg.tau);
      soft_update(agent.target2, agent.critic2, cfg.tau);
    }

    float mean_lp = 0.0f;
    for (float lp : sample.log_prob.data) mean_lp += lp;
    mean_lp /= static_cast<float>(B);

    stats.critic1_loss += cr.loss1 * inv_steps;
    stats.critic2_loss += cr.loss2 * inv_steps;
    stats.actor_loss += actor_loss * inv_steps;
    stats.alpha_loss += alpha_loss * inv_steps;
    stats.alpha += agent.alpha() * inv_steps;
    stats.mean_log_prob += mean_lp * inv_steps;
  }
  return stats;
}

}  // namespace resprect
