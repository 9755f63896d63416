#include "tmlab/maddpg/maddpg.hpp"

#include <algorithm>

#include "tmlab/errors.hpp"

namespace tmlab::maddpg {

void TrainHyper::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("train.gamma must lie in [0, 1)");
  if (!(lr_actor > 0.0)) throw InputError("train.lr_actor must be positive");
  if (!(lr_critic > 0.0)) throw InputError("train.lr_critic must be positive");
  if (!(polyak >= 0.0 && polyak <= 1.0)) throw InputError("train.polyak must lie in [0, 1]");
  if (batch <= 0) throw InputError("train.batch must be positive");
  if (!(noise_std >= 0.0)) throw InputError("train.noise_std must be non-negative");
  if (!(noise_decay > 0.0 && noise_decay <= 1.0)) throw InputError("train.noise_decay must lie in (0, 1]");
  if (!(noise_floor >= 0.0)) throw InputError("train.noise_floor must be non-negative");
  if (hidden.empty()) throw InputError("train.hidden must list at least one layer");
  for (int h : hidden) {
    if (h <= 0) throw InputError("train.hidden sizes must be positive");
  }
  if (buffer_capacity == 0) throw InputError("train.buffer_capacity must be positive");
  if (warmup_factor < 1) throw InputError("train.warmup_factor must be >= 1");
  if (update_every < 1) throw InputError("train.update_every must be >= 1");
}

namespace {

std::vector<int> with_io(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

Policy make_policy(const TrainHyper& hyper, Rng& rng) {
  Policy p;
  p.net = nn::Mlp::random(with_io(env::kObsDim, hyper.hidden, env::kActionDim),
                          nn::Activation::kRelu, nn::Activation::kTanh, rng);
  p.target = p.net;
  p.opt = nn::AdamState::for_net(p.net, {.learning_rate = hyper.lr_actor});
  return p;
}

Critic make_critic(const TrainHyper& hyper, Rng& rng) {
  Critic c;
  c.net = nn::Mlp::random(with_io(kCriticInputDim, hyper.hidden, 1), nn::Activation::kRelu,
                          nn::Activation::kIdentity, rng);
  c.target = c.net;
  c.opt = nn::AdamState::for_net(c.net, {.learning_rate = hyper.lr_critic});
  return c;
}

MaddpgAgent make_agent(const TrainHyper& hyper, Rng& rng) {
  MaddpgAgent a;
  a.actor = make_policy(hyper, rng);
  a.critic = make_critic(hyper, rng);
  return a;
}

env::Action act(const nn::Mlp& actor, const env::Observation& obs, double noise_std, Rng& rng) {
  const std::vector<double> out = actor.forward(obs);
  env::Action a{};
  for (int d = 0; d < env::kActionDim; ++d) {
    double v = out[d];
    if (noise_std > 0.0) v += noise_std * rng.normal();
    a[d] = std::clamp(v, -1.0, 1.0);
  }
  return a;
}

BatchTensors BatchTensors::select(std::span<const int> columns) const {
  const std::vector<int> idx(columns.begin(), columns.end());
  BatchTensors b;
  b.global = global(Eigen::all, idx);
  b.global_next = global_next(Eigen::all, idx);
  b.actions = actions(Eigen::all, idx);
  b.rewards = rewards(Eigen::all, idx);
  b.not_done = not_done(Eigen::all, idx);
  for (int i = 0; i < env::kNumAgents; ++i) {
    b.obs[i] = obs[i](Eigen::all, idx);
    b.obs_next[i] = obs_next[i](Eigen::all, idx);
    b.labels[i].reserve(idx.size());
    for (int c : idx) b.labels[i].push_back(labels[i][c]);
  }
  return b;
}

BatchTensors to_tensors(std::span<const replay::Transition> batch) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  BatchTensors b;
  b.global.resize(env::kGlobalDim, n);
  b.global_next.resize(env::kGlobalDim, n);
  b.actions.resize(env::kNumAgents * env::kActionDim, n);
  b.rewards.resize(env::kNumAgents, n);
  b.not_done.resize(1, n);
  for (int i = 0; i < env::kNumAgents; ++i) {
    b.obs[i].resize(env::kObsDim, n);
    b.obs_next[i].resize(env::kObsDim, n);
    b.labels[i].resize(batch.size());
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    const replay::Transition& t = batch[static_cast<std::size_t>(k)];
    for (int d = 0; d < env::kGlobalDim; ++d) {
      b.global(d, k) = t.global[d];
      b.global_next(d, k) = t.global_next[d];
    }
    for (int i = 0; i < env::kNumAgents; ++i) {
      for (int d = 0; d < env::kActionDim; ++d) b.actions(2 * i + d, k) = t.actions[i][d];
      for (int d = 0; d < env::kObsDim; ++d) {
        b.obs[i](d, k) = t.obs[i][d];
        b.obs_next[i](d, k) = t.obs_next[i][d];
      }
      b.rewards(i, k) = t.rewards[i];
      b.labels[i][static_cast<std::size_t>(k)] = t.labels[i];
    }
    b.not_done(0, k) = t.done ? 0.0 : 1.0;
  }
  return b;
}

Matrix critic_inputs(const Matrix& global, const Matrix& joint_actions) {
  if (global.cols() != joint_actions.cols()) throw ShapeError("critic_inputs: batch size mismatch");
  Matrix in(global.rows() + joint_actions.rows(), global.cols());
  in << global, joint_actions;
  return in;
}

Matrix target_joint_actions(const std::array<const nn::Mlp*, env::kNumAgents>& target_actors,
                            const BatchTensors& batch) {
  Matrix a(env::kNumAgents * env::kActionDim, batch.size());
  for (int i = 0; i < env::kNumAgents; ++i) {
    a.middleRows(2 * i, 2) = target_actors[i]->forward(batch.obs_next[i]);
  }
  return a;
}

Matrix critic_targets(const std::array<const nn::Mlp*, env::kNumAgents>& target_critics,
                      const BatchTensors& batch, const Matrix& next_joint_actions, double gamma) {
  const Matrix in = critic_inputs(batch.global_next, next_joint_actions);
  Matrix y(env::kNumAgents, batch.size());
  for (int i = 0; i < env::kNumAgents; ++i) {
    const Matrix q = target_critics[i]->forward(in);
    y.row(i) = batch.rewards.row(i) + gamma * q.cwiseProduct(batch.not_done);
  }
  return y;
}

LossGradient critic_loss_gradient(const nn::Mlp& critic, const BatchTensors& batch,
                                  const Matrix& y) {
  if (y.rows() != 1 || y.cols() != batch.size()) throw ShapeError("critic_loss_gradient: y shape");
  const nn::ForwardTape tape = critic.forward_tape(critic_inputs(batch.global, batch.actions));
  const Matrix diff = tape.output() - y;
  const double n = static_cast<double>(batch.size());
  LossGradient out;
  out.value = diff.squaredNorm() / n;
  out.grads = critic.backward(tape, (2.0 / n) * diff).grads;
  return out;
}

double critic_update(Critic& critic, const BatchTensors& batch, const Matrix& y) {
  LossGradient lg = critic_loss_gradient(critic.net, batch, y);
  if (!std::isfinite(lg.value)) throw NumericError("critic_update: non-finite loss");
  nn::adam_step(critic.net, lg.grads, critic.opt);
  return lg.value;
}

LossGradient actor_objective_gradient(const nn::Mlp& actor, const nn::Mlp& critic,
                                      const BatchTensors& batch, int agent) {
  const nn::ForwardTape actor_tape = actor.forward_tape(batch.obs[agent]);
  Matrix joint = batch.actions;
  joint.middleRows(2 * agent, 2) = actor_tape.output();
  const nn::ForwardTape critic_tape = critic.forward_tape(critic_inputs(batch.global, joint));
  const double n = static_cast<double>(batch.size());
  LossGradient out;
  out.value = critic_tape.output().sum() / n;
  const Matrix upstream = Matrix::Constant(1, batch.size(), -1.0 / n);
  const nn::Backprop through_critic = critic.backward(critic_tape, upstream);
  const Matrix action_grad = through_critic.input_grad.middleRows(env::kGlobalDim + 2 * agent, 2);
  out.grads = actor.backward(actor_tape, action_grad).grads;
  return out;
}

double actor_update(Policy& actor, const nn::Mlp& critic, const BatchTensors& batch, int agent) {
  LossGradient lg = actor_objective_gradient(actor.net, critic, batch, agent);
  if (!std::isfinite(lg.value)) throw NumericError("actor_update: non-finite objective");
  nn::adam_step(actor.net, lg.grads, actor.opt);
  return lg.value;
}

void soft_update(Policy& p, double rate) { nn::polyak_update(p.target, p.net, rate); }
void soft_update(Critic& c, double rate) { nn::polyak_update(c.target, c.net, rate); }

}  // namespace tmlab::maddpg
