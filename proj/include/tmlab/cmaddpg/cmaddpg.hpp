#pragma once

#include <array>
#include <limits>
#include <span>
#include <vector>

#include "tmlab/env/touchmark.hpp"
#include "tmlab/maddpg/maddpg.hpp"
#include "tmlab/nn/mlp.hpp"
#include "tmlab/nn/optim.hpp"
#include "tmlab/rng.hpp"

namespace tmlab::cmaddpg {

using Labels = std::array<int, env::kNumAgents>;

// Label 1 (winning) for both members of a team whose best critic value is
// strictly above the other team's best; label 2 otherwise, so a tie labels
// every agent 2.
Labels label_teams(const std::array<double, env::kNumAgents>& q);

// Evaluates each agent's critic on (x, a) and labels as above.
Labels label_teams(const std::array<const nn::Mlp*, env::kNumAgents>& critics,
                   const env::GlobalState& x, const env::JointAction& a);

// 20 -> 64 -> 32 -> 1, relu hidden, sigmoid output.
nn::Mlp make_controller_net(Rng& rng);

// Label 1 if the controller output is >= 0.5, else 2. `view` is the team's
// view of the global state (team_view).
int select_policy(const nn::Mlp& controller, const env::GlobalState& view);

// exp(-episode / c).
double exploration_probability(int episode, double c);
bool exploration_gate(int episode, double c, Rng& rng);

// Ensemble of J deterministic policies sharing one centralized critic.
// J = 1 is plain MADDPG.
struct EnsembleAgent {
  std::vector<maddpg::Policy> policies;
  maddpg::Critic critic;

  int ensemble_size() const { return static_cast<int>(policies.size()); }
};

EnsembleAgent make_ensemble_agent(const maddpg::TrainHyper& hyper, int ensemble_size, Rng& rng);

struct EnsembleUpdate {
  // Pre-step objective per policy; NaN where the partition was empty.
  std::array<double, 2> objective{std::numeric_limits<double>::quiet_NaN(),
                                  std::numeric_limits<double>::quiet_NaN()};
  // Batch columns consumed by each policy.
  std::array<std::vector<int>, 2> columns;
};

// Splits the batch by agent i's stored label and applies one actor update
// to each policy on its own part. With a single policy every column goes to
// it. Empty parts leave the policy untouched.
EnsembleUpdate ensemble_policy_update(EnsembleAgent& agent, const maddpg::BatchTensors& batch,
                                      int agent_index);

// Column indices of the batch whose label for `agent_index` is `label`.
std::vector<int> partition_columns(const maddpg::BatchTensors& batch, int agent_index, int label);

struct LabeledState {
  env::GlobalState view{};  // team view of the global state
  int label = 1;
};

struct ControllerTraining {
  double learning_rate = 1e-3;
  int batch = 256;
  int passes = 10;

  void validate() const;
};

struct Controller {
  nn::Mlp net;
  nn::AdamState opt;
};

Controller make_controller(const ControllerTraining& training, Rng& rng);

// Mean binary cross-entropy over the pairs and its parameter gradient.
maddpg::LossGradient controller_loss_gradient(const nn::Mlp& net, const nn::Matrix& inputs,
                                              std::span<const int> labels);
double controller_loss(const nn::Mlp& net, std::span<const LabeledState> pairs);

// `passes` shuffled sweeps of minibatch Adam steps. Returns the mean loss
// before the first step; an empty set is a no-op returning 0.
double controller_update(Controller& controller, std::span<const LabeledState> pairs,
                         const ControllerTraining& training, Rng& rng);

double controller_accuracy(const nn::Mlp& net, std::span<const LabeledState> pairs);

nn::Matrix to_matrix(std::span<const LabeledState> pairs);

// Rows of a 20 x B global-state matrix reordered into the given team's view.
nn::Matrix team_view_rows(const nn::Matrix& global, int team);

}  // namespace tmlab::cmaddpg
