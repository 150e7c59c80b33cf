#include "fedhvac/sac/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fedhvac::sac {
namespace {

constexpr double kTanhFloor = 1e-6;
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

struct PolicyHead {
  nn::Batch mean;
  nn::Batch log_std;        // clamped
  nn::Batch log_std_live;   // 1 where the clamp is inactive
};

PolicyHead split_head(const SacAgent& agent, const nn::Batch& out) {
  const auto a = static_cast<Eigen::Index>(agent.act_dim());
  PolicyHead h;
  h.mean = out.topRows(a);
  const nn::Batch raw = out.bottomRows(a);
  h.log_std = raw.cwiseMax(agent.config.log_std_min).cwiseMin(agent.config.log_std_max);
  h.log_std_live = ((raw.array() >= agent.config.log_std_min) && (raw.array() <= agent.config.log_std_max))
                       .cast<double>();
  return h;
}

struct Squashed {
  nn::Batch squashed;            // tanh(u)
  Eigen::RowVectorXd log_probs;
};

Squashed squash(const PolicyHead& head, const nn::Batch& noise, double log_half_sum) {
  Squashed s;
  const nn::Batch u = head.mean.array() + head.log_std.array().exp() * noise.array();
  s.squashed = u.array().tanh();
  const nn::Batch per_dim = -0.5 * noise.array().square() - head.log_std.array() - kHalfLog2Pi -
                            (1.0 - s.squashed.array().square() + kTanhFloor).log();
  s.log_probs = per_dim.colwise().sum().array() - log_half_sum;
  return s;
}

double log_half_sum(const ActionBox& box) {
  double s = 0.0;
  for (std::size_t j = 0; j < box.size(); ++j) s += std::log(box.half(j));
  return s;
}

nn::Batch stack(const nn::Batch& top, const nn::Batch& bottom) {
  nn::Batch out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

nn::Batch draw_noise(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  nn::Batch n(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) n(r, c) = rng.normal();
  }
  return n;
}

void check_head(const PolicyHead& h) {
  if (!h.mean.allFinite()) throw PolicyError("policy mean head produced a non-finite value");
  if (!h.log_std.allFinite()) throw PolicyError("policy log_std head produced a non-finite value");
}

double strictly_inside(double x, double lo, double hi) {
  return std::clamp(x, std::nextafter(lo, hi), std::nextafter(hi, lo));
}

}  // namespace

void ActionBox::validate() const {
  if (low.empty() || low.size() != high.size()) throw std::invalid_argument("action box bounds mismatch");
  for (std::size_t j = 0; j < low.size(); ++j) {
    if (!(high[j] > low[j])) throw std::invalid_argument("action box must have high > low");
  }
}

void SacConfig::validate() const {
  action_box.validate();
  if (obs_dim == 0) throw std::invalid_argument("obs_dim must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  if (!(polyak > 0.0 && polyak <= 1.0)) throw std::invalid_argument("polyak must lie in (0, 1]");
  if (batch_size == 0 || train_freq == 0 || buffer_capacity == 0) {
    throw std::invalid_argument("batch_size, train_freq and buffer_capacity must be positive");
  }
  if (!(log_std_min < log_std_max)) throw std::invalid_argument("log_std_min must be below log_std_max");
  for (auto h : hidden) {
    if (h == 0) throw std::invalid_argument("hidden layer widths must be positive");
  }
  optimizer.validate();
}

nn::MlpSpec make_actor_spec(const SacConfig& config) {
  nn::MlpSpec s;
  s.layer_dims.push_back(config.obs_dim);
  s.layer_dims.insert(s.layer_dims.end(), config.hidden.begin(), config.hidden.end());
  s.layer_dims.push_back(2 * config.action_box.size());
  return s;
}

nn::MlpSpec make_critic_spec(const SacConfig& config) {
  nn::MlpSpec s;
  s.layer_dims.push_back(config.obs_dim + config.action_box.size());
  s.layer_dims.insert(s.layer_dims.end(), config.hidden.begin(), config.hidden.end());
  s.layer_dims.push_back(1);
  return s;
}

SacAgent SacAgent::create(const SacConfig& config, std::uint64_t seed) {
  config.validate();
  SacAgent a;
  a.config = config;
  a.actor_spec = make_actor_spec(config);
  a.critic_spec = make_critic_spec(config);
  Rng init(derive_seed(seed, 1));
  a.actor = nn::init_params(a.actor_spec, init);
  a.critic1 = nn::init_params(a.critic_spec, init);
  a.critic2 = nn::init_params(a.critic_spec, init);
  a.target1 = a.critic1;
  a.target2 = a.critic2;
  a.log_alpha = config.initial_log_alpha;
  a.actor_opt = nn::OptimizerState::create(config.optimizer, a.actor.size());
  a.critic1_opt = nn::OptimizerState::create(config.optimizer, a.critic1.size());
  a.critic2_opt = nn::OptimizerState::create(config.optimizer, a.critic2.size());
  a.alpha_opt = nn::OptimizerState::create(config.optimizer, 1);
  a.rng = Rng(derive_seed(seed, 2));
  return a;
}

double SacAgent::alpha() const { return std::exp(log_alpha); }

double SacAgent::target_entropy() const {
  return config.target_entropy.value_or(-static_cast<double>(act_dim()));
}

double squashed_log_prob(std::span<const double> mean, std::span<const double> log_std,
                         std::span<const double> noise, const ActionBox& box) {
  double lp = 0.0;
  for (std::size_t j = 0; j < mean.size(); ++j) {
    const double t = std::tanh(mean[j] + std::exp(log_std[j]) * noise[j]);
    lp += -0.5 * noise[j] * noise[j] - log_std[j] - kHalfLog2Pi - std::log(1.0 - t * t + kTanhFloor) -
          std::log(box.half(j));
  }
  return lp;
}

SampledAction sample_action(const SacAgent& agent, std::span<const double> obs,
                            std::span<const double> noise) {
  const std::size_t a = agent.act_dim();
  if (noise.size() != a) throw nn::ShapeError("noise length must equal the action dimension");
  const auto out = nn::forward(agent.actor_spec, agent.actor, obs);
  nn::Batch o = Eigen::Map<const Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
  const PolicyHead head = split_head(agent, o);
  check_head(head);

  SampledAction s;
  s.action.resize(a);
  std::vector<double> mean(a), ls(a);
  const auto& box = agent.config.action_box;
  for (std::size_t j = 0; j < a; ++j) {
    mean[j] = head.mean(static_cast<Eigen::Index>(j), 0);
    ls[j] = head.log_std(static_cast<Eigen::Index>(j), 0);
    const double t = std::tanh(mean[j] + std::exp(ls[j]) * noise[j]);
    s.action[j] = strictly_inside(box.mid(j) + box.half(j) * t, box.low[j], box.high[j]);
  }
  s.log_prob = squashed_log_prob(mean, ls, noise, box);
  if (!std::isfinite(s.log_prob)) throw PolicyError("log-probability is not finite");
  return s;
}

SampledAction sample_action(const SacAgent& agent, std::span<const double> obs, Rng& rng) {
  std::vector<double> noise(agent.act_dim());
  for (auto& n : noise) n = rng.normal();
  return sample_action(agent, obs, noise);
}

std::vector<double> act_deterministic(const SacAgent& agent, std::span<const double> obs) {
  const auto out = nn::forward(agent.actor_spec, agent.actor, obs);
  const std::size_t a = agent.act_dim();
  const auto& box = agent.config.action_box;
  std::vector<double> action(a);
  for (std::size_t j = 0; j < a; ++j) {
    if (!std::isfinite(out[j])) throw PolicyError("policy mean head produced a non-finite value");
    action[j] = strictly_inside(box.mid(j) + box.half(j) * std::tanh(out[j]), box.low[j], box.high[j]);
  }
  return action;
}

std::vector<double> uniform_action(const ActionBox& box, Rng& rng) {
  std::vector<double> a(box.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    a[j] = strictly_inside(rng.uniform(box.low[j], box.high[j]), box.low[j], box.high[j]);
  }
  return a;
}

TrainingBatch make_batch(const ReplayBuffer& buffer, std::span<const std::size_t> slots,
                         const RunningNormalizer& normalizer, const ActionBox& box) {
  const auto b = static_cast<Eigen::Index>(slots.size());
  const auto od = static_cast<Eigen::Index>(buffer.obs_dim());
  const auto ad = static_cast<Eigen::Index>(buffer.act_dim());
  TrainingBatch batch;
  batch.obs.resize(od, b);
  batch.next_obs.resize(od, b);
  batch.actions.resize(ad, b);
  batch.rewards.resize(b);
  batch.dones.resize(b);
  for (Eigen::Index c = 0; c < b; ++c) {
    const std::size_t s = slots[static_cast<std::size_t>(c)];
    normalizer.normalize_obs_into(buffer.obs(s), {batch.obs.col(c).data(), buffer.obs_dim()});
    normalizer.normalize_obs_into(buffer.next_obs(s), {batch.next_obs.col(c).data(), buffer.obs_dim()});
    const auto act = buffer.action(s);
    for (Eigen::Index j = 0; j < ad; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      batch.actions(j, c) = (act[jj] - box.mid(jj)) / box.half(jj);
    }
    batch.rewards(c) = normalizer.normalize_reward(buffer.reward(s));
    batch.dones(c) = buffer.done(s) ? 1.0 : 0.0;
  }
  return batch;
}

double soft_target(double reward, double gamma, double min_target_q, double alpha, double log_prob,
                   bool done) {
  if (done) return reward;
  return reward + gamma * (min_target_q - alpha * log_prob);
}

Eigen::RowVectorXd compute_targets(const SacAgent& agent, const TrainingBatch& batch,
                                   const nn::Batch& next_noise) {
  if (batch.size() == 0) throw std::invalid_argument("cannot compute targets for an empty batch");
  const PolicyHead head = split_head(agent, nn::forward_batch(agent.actor_spec, agent.actor, batch.next_obs));
  check_head(head);
  const Squashed next = squash(head, next_noise, log_half_sum(agent.config.action_box));
  const nn::Batch input = stack(batch.next_obs, next.squashed);
  const nn::Batch q1 = nn::forward_batch(agent.critic_spec, agent.target1, input);
  const nn::Batch q2 = nn::forward_batch(agent.critic_spec, agent.target2, input);
  const double alpha = agent.alpha();
  Eigen::RowVectorXd y(batch.size());
  for (Eigen::Index c = 0; c < batch.size(); ++c) {
    y(c) = soft_target(batch.rewards(c), agent.config.gamma, std::min(q1(0, c), q2(0, c)), alpha,
                       next.log_probs(c), batch.dones(c) != 0.0);
  }
  return y;
}

LossAndGrad critic_loss(const nn::MlpSpec& critic_spec, const nn::ParamVector& critic,
                        const TrainingBatch& batch, const Eigen::RowVectorXd& targets) {
  const double b = static_cast<double>(batch.size());
  nn::ForwardTape tape;
  const nn::Batch q = nn::forward_batch(critic_spec, critic, stack(batch.obs, batch.actions), &tape);
  const Eigen::RowVectorXd err = q.row(0) - targets;
  LossAndGrad out;
  out.loss = 0.5 * err.squaredNorm() / b;
  out.grad = nn::GradVector(critic.size());
  const nn::Batch dq = err / b;
  nn::backward_batch(critic_spec, critic, tape, dq, &out.grad);
  return out;
}

ActorLoss actor_loss(const SacAgent& agent, const nn::Batch& obs, const nn::Batch& noise) {
  const auto a = static_cast<Eigen::Index>(agent.act_dim());
  const Eigen::Index n = obs.cols();
  const double b = static_cast<double>(n);
  const double alpha = agent.alpha();

  nn::ForwardTape actor_tape;
  const PolicyHead head = split_head(agent, nn::forward_batch(agent.actor_spec, agent.actor, obs, &actor_tape));
  check_head(head);
  const Squashed pi = squash(head, noise, log_half_sum(agent.config.action_box));

  const nn::Batch input = stack(obs, pi.squashed);
  nn::ForwardTape t1, t2;
  const nn::Batch q1 = nn::forward_batch(agent.critic_spec, agent.critic1, input, &t1);
  const nn::Batch q2 = nn::forward_batch(agent.critic_spec, agent.critic2, input, &t2);

  nn::Batch dq1 = nn::Batch::Zero(1, n);
  nn::Batch dq2 = nn::Batch::Zero(1, n);
  double loss = 0.0;
  for (Eigen::Index c = 0; c < n; ++c) {
    if (q1(0, c) <= q2(0, c)) {
      loss += alpha * pi.log_probs(c) - q1(0, c);
      dq1(0, c) = -1.0 / b;
    } else {
      loss += alpha * pi.log_probs(c) - q2(0, c);
      dq2(0, c) = -1.0 / b;
    }
  }

  // Critics are frozen: only their input gradients are needed.
  const nn::Batch dx1 = nn::backward_batch(agent.critic_spec, agent.critic1, t1, dq1, nullptr);
  const nn::Batch dx2 = nn::backward_batch(agent.critic_spec, agent.critic2, t2, dq2, nullptr);
  const nn::Batch d_squashed = dx1.bottomRows(a) + dx2.bottomRows(a);

  const auto t = pi.squashed.array();
  const auto one_minus_t2 = 1.0 - t.square();
  // d/du of -log(1 - tanh(u)^2 + floor)
  const nn::Batch d_logdet = 2.0 * t * one_minus_t2 / (one_minus_t2 + kTanhFloor);
  const nn::Batch du = d_squashed.array() * one_minus_t2 + (alpha / b) * d_logdet.array();
  const nn::Batch sigma_eps = head.log_std.array().exp() * noise.array();

  nn::Batch d_out(2 * a, n);
  d_out.topRows(a) = du;
  d_out.bottomRows(a) = (du.array() * sigma_eps.array() - alpha / b) * head.log_std_live.array();

  ActorLoss out;
  out.loss = loss / b;
  out.grad = nn::GradVector(agent.actor.size());
  nn::backward_batch(agent.actor_spec, agent.actor, actor_tape, d_out, &out.grad);
  out.log_probs = pi.log_probs;
  return out;
}

TemperatureLoss temperature_loss(double log_alpha, const Eigen::RowVectorXd& log_probs,
                                 double target_entropy) {
  const double alpha = std::exp(log_alpha);
  const double mean_term = (log_probs.array() + target_entropy).mean();
  TemperatureLoss t;
  t.loss = -alpha * mean_term;
  t.grad = -alpha * mean_term;
  return t;
}

void polyak_update(nn::ParamVector& target, const nn::ParamVector& source, double rho) {
  if (target.size() != source.size()) throw nn::ShapeError("polyak update on incongruent vectors");
  for (std::size_t i = 0; i < target.size(); ++i) {
    target[i] += rho * (source[i] - target[i]);
  }
}

std::optional<SacLosses> sac_gradient_step(SacAgent& agent, ReplayBuffer& buffer,
                                           const RunningNormalizer& normalizer) {
  const auto& cfg = agent.config;
  if (buffer.size() < std::max(cfg.batch_size, cfg.learning_starts)) return std::nullopt;

  const auto slots = buffer.sample_slots(cfg.batch_size);
  const TrainingBatch batch = make_batch(buffer, slots, normalizer, cfg.action_box);
  const auto a = static_cast<Eigen::Index>(agent.act_dim());
  const auto n = batch.size();

  const nn::Batch next_noise = draw_noise(agent.rng, a, n);
  const Eigen::RowVectorXd y = compute_targets(agent, batch, next_noise);

  SacLosses out;
  {
    auto l1 = critic_loss(agent.critic_spec, agent.critic1, batch, y);
    nn::optimizer_step(agent.critic1_opt, agent.critic1, l1.grad);
    out.critic1 = l1.loss;
    auto l2 = critic_loss(agent.critic_spec, agent.critic2, batch, y);
    nn::optimizer_step(agent.critic2_opt, agent.critic2, l2.grad);
    out.critic2 = l2.loss;
  }

  const nn::Batch pi_noise = draw_noise(agent.rng, a, n);
  const ActorLoss al = actor_loss(agent, batch.obs, pi_noise);
  nn::optimizer_step(agent.actor_opt, agent.actor, al.grad);
  out.actor = al.loss;

  const TemperatureLoss tl = temperature_loss(agent.log_alpha, al.log_probs, agent.target_entropy());
  nn::ParamVector la(std::vector<double>{agent.log_alpha});
  nn::optimizer_step(agent.alpha_opt, la, nn::GradVector(std::vector<double>{tl.grad}));
  agent.log_alpha = la[0];
  out.alpha_loss = tl.loss;
  out.alpha = agent.alpha();

  polyak_update(agent.target1, agent.critic1, cfg.polyak);
  polyak_update(agent.target2, agent.critic2, cfg.polyak);
  ++agent.gradient_steps;
  return out;
}

}  // namespace fedhvac::sac
