#include "tmlab/incentive/incentive_rl.hpp"

#include <algorithm>
#include <cmath>

#include "tmlab/errors.hpp"
#include "tmlab/nn/losses.hpp"

namespace tmlab::incentive {
namespace {

constexpr std::array<char, 4> kSacTag{'S', 'A', 'C', 'A'};

std::vector<int> with_io(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

nn::Matrix q_inputs(const nn::Matrix& states, const nn::Matrix& actions) {
  if (states.cols() != actions.cols()) throw ShapeError("SAC: state/action batch mismatch");
  nn::Matrix in(kSacStateDim + 1, states.cols());
  in << states, actions;
  return in;
}

struct PolicyDraw {
  nn::Matrix actions;   // 1 x B
  nn::Matrix log_prob;  // 1 x B
};

PolicyDraw draw(const nn::Matrix& head, const nn::Matrix& noise) {
  PolicyDraw d;
  d.actions.resize(1, head.cols());
  d.log_prob.resize(1, head.cols());
  for (Eigen::Index k = 0; k < head.cols(); ++k) {
    const double m = head(0, k);
    const double ls = head(1, k);
    const double e = noise(0, k);
    const nn::SquashedSample s = nn::squashed_gaussian_transform({&m, 1}, {&ls, 1}, {&e, 1});
    d.actions(0, k) = s.action[0];
    d.log_prob(0, k) = s.log_prob;
  }
  return d;
}

nn::Matrix normal_matrix(Eigen::Index cols, Rng& rng) {
  nn::Matrix m(1, cols);
  for (Eigen::Index k = 0; k < cols; ++k) m(0, k) = rng.normal();
  return m;
}

}  // namespace

void SacConfig::validate() const {
  if (apply_period < 1) throw InputError("sac.apply_period must be >= 1");
  if (!(alpha_max > 0.0) || !std::isfinite(alpha_max)) throw InputError("sac.alpha_max must be positive");
  if (pretrain_episodes < 0) throw InputError("sac.pretrain_episodes must be >= 0");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("sac.gamma must lie in [0, 1)");
  if (!(learning_rate > 0.0)) throw InputError("sac.lr must be positive");
  if (!(polyak >= 0.0 && polyak <= 1.0)) throw InputError("sac.polyak must lie in [0, 1]");
  if (batch <= 0) throw InputError("sac.batch must be positive");
  if (!(temperature >= 0.0)) throw InputError("sac.temperature must be >= 0");
  if (hidden.empty()) throw InputError("sac.hidden must list at least one layer");
  for (int h : hidden) {
    if (h <= 0) throw InputError("sac.hidden sizes must be positive");
  }
  if (buffer_capacity == 0) throw InputError("sac.buffer_capacity must be positive");
  if (warmup < 1) throw InputError("sac.warmup must be >= 1");
  if (updates_per_block < 0) throw InputError("sac.updates_per_block must be >= 0");
}

void SacAgent::remember(const SacTransition& t, std::size_t capacity) {
  ++transitions_seen;
  if (replay.size() < capacity) {
    replay.push_back(t);
    return;
  }
  replay[replay_cursor] = t;
  replay_cursor = (replay_cursor + 1) % capacity;
}

SacAgent make_sac_agent(const SacConfig& config, Rng& rng) {
  config.validate();
  SacAgent a;
  a.policy = nn::Mlp::random(with_io(kSacStateDim, config.hidden, 2), nn::Activation::kRelu,
                             nn::Activation::kIdentity, rng);
  a.q1 = nn::Mlp::random(with_io(kSacStateDim + 1, config.hidden, 1), nn::Activation::kRelu,
                         nn::Activation::kIdentity, rng);
  a.q2 = nn::Mlp::random(with_io(kSacStateDim + 1, config.hidden, 1), nn::Activation::kRelu,
                         nn::Activation::kIdentity, rng);
  a.q1_target = a.q1;
  a.q2_target = a.q2;
  const nn::AdamConfig adam{.learning_rate = config.learning_rate};
  a.policy_opt = nn::AdamState::for_net(a.policy, adam);
  a.q1_opt = nn::AdamState::for_net(a.q1, adam);
  a.q2_opt = nn::AdamState::for_net(a.q2, adam);
  return a;
}

std::array<double, kSacStateDim> observe_speeds(const std::array<double, env::kNumAgents>& speeds,
                                                double max_speed_limit) {
  if (!(max_speed_limit > 0.0)) throw InputError("observe_speeds: speed limit must be positive");
  std::array<double, kSacStateDim> s{};
  for (int i = 0; i < env::kNumAgents; ++i) s[i] = speeds[i] / max_speed_limit;
  return s;
}

IncentiveAction incentive_action(const SacAgent& agent, const std::array<double, kSacStateDim>& s,
                                 double alpha_max, Rng& rng, bool deterministic) {
  const std::vector<double> head = agent.policy.forward(s);
  const double noise = deterministic ? 0.0 : rng.normal();
  const nn::SquashedSample sample =
      nn::squashed_gaussian_transform({&head[0], 1}, {&head[1], 1}, {&noise, 1});
  IncentiveAction a;
  a.raw = sample.action[0];
  a.alpha = std::clamp((a.raw + 1.0) * 0.5 * alpha_max, 0.0, alpha_max);
  return a;
}

double performance_gap(const std::array<int, env::kNumAgents>& block_counts, RlTarget which,
                       const RoleAssignment& roles) {
  std::array<double, env::kNumAgents> raw{};
  for (int i = 0; i < env::kNumAgents; ++i) raw[i] = block_counts[i];
  const NormalizedStats n = normalize(raw);
  if (n.scale <= 0.0) return 0.0;
  switch (which) {
    case RlTarget::kTeam:
      return ((n.raw[0] + n.raw[1]) - (n.raw[2] + n.raw[3])) / n.scale;
    case RlTarget::kAgent:
      return (n.raw[roles.weak_team_strong_member()] - n.raw[roles.weak_agent]) / n.scale;
    case RlTarget::kNone:
      break;
  }
  throw InputError("performance_gap: no RL target");
}

double incentive_reward(const std::array<int, env::kNumAgents>& block_counts, RlTarget which,
                        const RoleAssignment& roles) {
  return -std::abs(performance_gap(block_counts, which, roles));
}

SacBatch to_batch(const std::vector<SacTransition>& items) {
  const auto n = static_cast<Eigen::Index>(items.size());
  SacBatch b;
  b.states.resize(kSacStateDim, n);
  b.next_states.resize(kSacStateDim, n);
  b.actions.resize(1, n);
  b.rewards.resize(1, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const SacTransition& t = items[static_cast<std::size_t>(k)];
    for (int d = 0; d < kSacStateDim; ++d) {
      b.states(d, k) = t.state[d];
      b.next_states(d, k) = t.next_state[d];
    }
    b.actions(0, k) = t.action;
    b.rewards(0, k) = t.reward;
  }
  return b;
}

maddpg::LossGradient sac_q_loss_gradient(const nn::Mlp& q, const nn::Matrix& states,
                                         const nn::Matrix& actions, const nn::Matrix& y) {
  const nn::ForwardTape tape = q.forward_tape(q_inputs(states, actions));
  if (y.rows() != 1 || y.cols() != states.cols()) throw ShapeError("sac_q_loss_gradient: y shape");
  const nn::Matrix diff = tape.output() - y;
  const double n = static_cast<double>(states.cols());
  maddpg::LossGradient out;
  out.value = diff.squaredNorm() / n;
  out.grads = q.backward(tape, (2.0 / n) * diff).grads;
  return out;
}

maddpg::LossGradient sac_policy_loss_gradient(const nn::Mlp& policy, const nn::Mlp& q1,
                                              const nn::Mlp& q2, const nn::Matrix& states,
                                              const nn::Matrix& noise, double temperature) {
  if (noise.rows() != 1 || noise.cols() != states.cols()) throw ShapeError("sac policy: noise shape");
  const nn::ForwardTape tape = policy.forward_tape(states);
  const nn::Matrix& head = tape.output();
  const PolicyDraw d = draw(head, noise);
  const nn::Matrix in = q_inputs(states, d.actions);
  const nn::ForwardTape t1 = q1.forward_tape(in);
  const nn::ForwardTape t2 = q2.forward_tape(in);

  const Eigen::Index b = states.cols();
  const double n = static_cast<double>(b);
  nn::Matrix mask1 = nn::Matrix::Zero(1, b);
  nn::Matrix mask2 = nn::Matrix::Zero(1, b);
  double loss = 0.0;
  for (Eigen::Index k = 0; k < b; ++k) {
    const bool first = t1.output()(0, k) <= t2.output()(0, k);
    (first ? mask1 : mask2)(0, k) = 1.0;
    loss += temperature * d.log_prob(0, k) - std::min(t1.output()(0, k), t2.output()(0, k));
  }
  const nn::Matrix g1 = q1.backward(t1, mask1).input_grad;
  const nn::Matrix g2 = q2.backward(t2, mask2).input_grad;

  nn::Matrix upstream(2, b);
  for (Eigen::Index k = 0; k < b; ++k) {
    const double m = head(0, k);
    const double ls = head(1, k);
    const double e = noise(0, k);
    const nn::SquashedGradients g = nn::squashed_gaussian_gradients({&m, 1}, {&ls, 1}, {&e, 1});
    const double dq_da = g1(kSacStateDim, k) + g2(kSacStateDim, k);
    upstream(0, k) = (temperature * g.log_prob_d_mean[0] - dq_da * g.action_d_mean[0]) / n;
    upstream(1, k) = (temperature * g.log_prob_d_log_std[0] - dq_da * g.action_d_log_std[0]) / n;
  }
  maddpg::LossGradient out;
  out.value = loss / n;
  out.grads = policy.backward(tape, upstream).grads;
  return out;
}

nn::Matrix sac_targets(const SacAgent& agent, const SacBatch& batch, const nn::Matrix& next_noise,
                       const SacConfig& config) {
  const PolicyDraw d = draw(agent.policy.forward(batch.next_states), next_noise);
  const nn::Matrix in = q_inputs(batch.next_states, d.actions);
  const nn::Matrix min_q = agent.q1_target.forward(in).cwiseMin(agent.q2_target.forward(in));
  return batch.rewards + config.gamma * (min_q - config.temperature * d.log_prob);
}

SacLosses sac_update(SacAgent& agent, const SacBatch& batch, const SacConfig& config, Rng& rng) {
  if (batch.size() == 0) throw InputError("sac_update: empty batch");
  const nn::Matrix y = sac_targets(agent, batch, normal_matrix(batch.size(), rng), config);
  SacLosses losses;
  maddpg::LossGradient l1 = sac_q_loss_gradient(agent.q1, batch.states, batch.actions, y);
  maddpg::LossGradient l2 = sac_q_loss_gradient(agent.q2, batch.states, batch.actions, y);
  if (!std::isfinite(l1.value) || !std::isfinite(l2.value)) throw NumericError("sac_update: non-finite Q loss");
  nn::adam_step(agent.q1, l1.grads, agent.q1_opt);
  nn::adam_step(agent.q2, l2.grads, agent.q2_opt);
  losses.q1 = l1.value;
  losses.q2 = l2.value;

  maddpg::LossGradient lp = sac_policy_loss_gradient(agent.policy, agent.q1, agent.q2, batch.states,
                                                     normal_matrix(batch.size(), rng),
                                                     config.temperature);
  if (!std::isfinite(lp.value)) throw NumericError("sac_update: non-finite policy loss");
  nn::adam_step(agent.policy, lp.grads, agent.policy_opt);
  losses.policy = lp.value;

  nn::polyak_update(agent.q1_target, agent.q1, config.polyak);
  nn::polyak_update(agent.q2_target, agent.q2, config.polyak);
  return losses;
}

PretrainResult pretrain(const cmaddpg::TrainConfig& train, const SacConfig& config, int episodes,
                        std::uint64_t seed) {
  config.validate();
  if (episodes < 0) throw InputError("pretrain: episodes must be >= 0");
  const RlTarget which = train.scheme.rl_target();
  if (which == RlTarget::kNone) {
    throw InputError("pretrain: scheme " + std::string(to_string(train.scheme.kind)) +
                     " has no RL-controlled incentive");
  }
  cmaddpg::Trainer trainer(train, derive_seed(seed, 0));
  Rng rng(derive_seed(seed, 1));
  PretrainResult result{make_sac_agent(config, rng), {}, {}};
  SacAgent& agent = result.agent;
  const RoleAssignment roles = trainer.scheme().roles();
  const double limit = train.env.max_speed_limit;

  const int blocks = episodes / config.apply_period;
  for (int blk = 0; blk < blocks; ++blk) {
    const auto s = observe_speeds(trainer.speeds(), limit);
    const IncentiveAction act = incentive_action(agent, s, config.alpha_max, rng, false);
    trainer.scheme().set_rl_alpha(act.alpha);
    std::array<int, env::kNumAgents> counts{};
    const int first = trainer.episodes_done() + 1;
    for (int e = 0; e < config.apply_period; ++e) {
      const eval::MetricsRow& row = trainer.run_episode();
      for (int i = 0; i < env::kNumAgents; ++i) counts[i] += row.landmark[i];
    }
    const double gap = performance_gap(counts, which, roles);
    const double reward = -std::abs(gap);
    agent.remember({s, act.raw, reward, observe_speeds(trainer.speeds(), limit)}, config.buffer_capacity);
    result.blocks.push_back({first, act.alpha, gap, reward});

    if (static_cast<int>(agent.replay.size()) >= config.warmup) {
      for (int u = 0; u < config.updates_per_block; ++u) {
        std::vector<SacTransition> picked;
        picked.reserve(static_cast<std::size_t>(config.batch));
        for (int k = 0; k < config.batch; ++k) picked.push_back(agent.replay[rng.below(agent.replay.size())]);
        sac_update(agent, to_batch(picked), config, rng);
      }
    }
  }
  trainer.run(episodes - blocks * config.apply_period);
  result.log = trainer.log();
  return result;
}

void run_with_frozen_agent(cmaddpg::Trainer& trainer, const SacAgent& agent,
                           const SacConfig& config, int episodes) {
  config.validate();
  Rng unused(0);
  for (int e = 0; e < episodes; ++e) {
    if (trainer.episodes_done() % config.apply_period == 0) {
      const auto s = observe_speeds(trainer.speeds(), trainer.config().env.max_speed_limit);
      trainer.scheme().set_rl_alpha(incentive_action(agent, s, config.alpha_max, unused, true).alpha);
    }
    trainer.run_episode();
  }
}

void write_sac(nn::BinaryWriter& w, const SacAgent& a) {
  w.tag(kSacTag);
  for (const nn::Mlp* net : {&a.policy, &a.q1, &a.q2, &a.q1_target, &a.q2_target}) nn::write_mlp(w, *net);
  nn::write_adam(w, a.policy_opt);
  nn::write_adam(w, a.q1_opt);
  nn::write_adam(w, a.q2_opt);
  w.u64(a.replay.size());
  w.u64(a.replay_cursor);
  w.u64(a.transitions_seen);
  for (const SacTransition& t : a.replay) {
    for (double v : t.state) w.f64(v);
    w.f64(t.action);
    w.f64(t.reward);
    for (double v : t.next_state) w.f64(v);
  }
}

SacAgent read_sac(nn::BinaryReader& r) {
  if (r.tag() != kSacTag) throw FormatError("checkpoint: missing incentive agent section");
  SacAgent a;
  a.policy = nn::read_mlp(r);
  a.q1 = nn::read_mlp(r);
  a.q2 = nn::read_mlp(r);
  a.q1_target = nn::read_mlp(r);
  a.q2_target = nn::read_mlp(r);
  if (a.policy.input_size() != kSacStateDim || a.policy.output_size() != 2 ||
      a.q1.input_size() != kSacStateDim + 1 || !a.q1.same_shape(a.q2) ||
      !a.q1.same_shape(a.q1_target) || !a.q2.same_shape(a.q2_target)) {
    throw FormatError("checkpoint: incentive agent networks have unexpected shapes");
  }
  a.policy_opt = nn::read_adam(r, a.policy);
  a.q1_opt = nn::read_adam(r, a.q1);
  a.q2_opt = nn::read_adam(r, a.q2);
  const std::uint64_t n = r.u64();
  a.replay_cursor = r.u64();
  a.transitions_seen = r.u64();
  if (n > (1u << 26) || (n > 0 && a.replay_cursor >= n) || a.transitions_seen < n) {
    throw FormatError("checkpoint: incentive replay header inconsistent");
  }
  a.replay.resize(n);
  for (SacTransition& t : a.replay) {
    for (double& v : t.state) v = r.f64();
    t.action = r.f64();
    t.reward = r.f64();
    for (double& v : t.next_state) v = r.f64();
  }
  return a;
}

}  // namespace tmlab::incentive
