#pragma once

#include <array>
#include <span>
#include <vector>

#include "tmlab/env/touchmark.hpp"
#include "tmlab/nn/mlp.hpp"
#include "tmlab/nn/optim.hpp"
#include "tmlab/replay/replay_buffer.hpp"
#include "tmlab/rng.hpp"

namespace tmlab::maddpg {

using nn::Matrix;

inline constexpr int kCriticInputDim = env::kGlobalDim + env::kNumAgents * env::kActionDim;

struct TrainHyper {
  double gamma = 0.95;
  double lr_actor = 1e-4;
  double lr_critic = 1e-3;
  double polyak = 0.01;
  int batch = 1024;
  double noise_std = 0.3;
  double noise_decay = 0.9999;  // per episode
  double noise_floor = 0.02;
  std::vector<int> hidden{64, 64};
  std::size_t buffer_capacity = 1'000'000;
  int warmup_factor = 10;  // updates start once the buffer holds warmup_factor * batch
  int update_every = 1;    // environment steps between update rounds

  void validate() const;
};

// A deterministic actor with its delayed target and optimizer.
struct Policy {
  nn::Mlp net;
  nn::Mlp target;
  nn::AdamState opt;
};

// Centralized critic Q_i(x, a_1..a_4) with its delayed target.
struct Critic {
  nn::Mlp net;
  nn::Mlp target;
  nn::AdamState opt;
};

struct MaddpgAgent {
  Policy actor;
  Critic critic;
};

Policy make_policy(const TrainHyper& hyper, Rng& rng);
Critic make_critic(const TrainHyper& hyper, Rng& rng);
MaddpgAgent make_agent(const TrainHyper& hyper, Rng& rng);

// tanh actor output plus Gaussian exploration noise, clamped to [-1, 1].
env::Action act(const nn::Mlp& actor, const env::Observation& obs, double noise_std, Rng& rng);

// Column-major views of a minibatch; column k is sample k.
struct BatchTensors {
  Matrix global;       // 20 x B
  Matrix global_next;  // 20 x B
  Matrix actions;      // 8 x B, agent i in rows 2i, 2i+1
  Matrix rewards;      // 4 x B
  Matrix not_done;     // 1 x B, 0 for terminal samples
  std::array<Matrix, env::kNumAgents> obs;       // 15 x B each
  std::array<Matrix, env::kNumAgents> obs_next;  // 15 x B each
  std::array<std::vector<int>, env::kNumAgents> labels;

  int size() const { return static_cast<int>(global.cols()); }
  BatchTensors select(std::span<const int> columns) const;
};

BatchTensors to_tensors(std::span<const replay::Transition> batch);

// [global; actions] stacked as critic input.
Matrix critic_inputs(const Matrix& global, const Matrix& joint_actions);

// a'_j = target_actor_j(o'_j) stacked for all four agents (8 x B).
Matrix target_joint_actions(const std::array<const nn::Mlp*, env::kNumAgents>& target_actors,
                            const BatchTensors& batch);

// y_i = r_i + gamma * Q'_i(x', a') for non-terminal samples, r_i otherwise.
// Row i of the result holds agent i's targets.
Matrix critic_targets(const std::array<const nn::Mlp*, env::kNumAgents>& target_critics,
                      const BatchTensors& batch, const Matrix& next_joint_actions, double gamma);

struct LossGradient {
  double value = 0.0;
  nn::Gradients grads;
};

// Mean squared TD error of `critic` against targets y (1 x B) and its gradient.
LossGradient critic_loss_gradient(const nn::Mlp& critic, const BatchTensors& batch,
                                  const Matrix& y);

// One Adam step on the critic; returns the pre-step loss.
double critic_update(Critic& critic, const BatchTensors& batch, const Matrix& y);

// value = mean over the batch of Q(x, a_1..pi(o_i)..a_4); other agents'
// actions come from the batch. grads is the gradient of -value (descent
// direction) with respect to the actor parameters.
LossGradient actor_objective_gradient(const nn::Mlp& actor, const nn::Mlp& critic,
                                      const BatchTensors& batch, int agent);

// One ascent step on the actor objective; returns the pre-step objective.
double actor_update(Policy& actor, const nn::Mlp& critic, const BatchTensors& batch, int agent);

void soft_update(Policy& p, double rate);
void soft_update(Critic& c, double rate);

}  // namespace tmlab::maddpg
