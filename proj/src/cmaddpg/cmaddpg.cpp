#include "tmlab/cmaddpg/cmaddpg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tmlab/errors.hpp"
#include "tmlab/nn/losses.hpp"

namespace tmlab::cmaddpg {

Labels label_teams(const std::array<double, env::kNumAgents>& q) {
  const double best0 = std::max(q[0], q[1]);
  const double best1 = std::max(q[2], q[3]);
  const int team0 = best0 > best1 ? 1 : 2;
  const int team1 = best1 > best0 ? 1 : 2;
  return {team0, team0, team1, team1};
}

Labels label_teams(const std::array<const nn::Mlp*, env::kNumAgents>& critics,
                   const env::GlobalState& x, const env::JointAction& a) {
  std::array<double, maddpg::kCriticInputDim> in{};
  std::copy(x.begin(), x.end(), in.begin());
  for (int i = 0; i < env::kNumAgents; ++i) {
    for (int d = 0; d < env::kActionDim; ++d) in[env::kGlobalDim + 2 * i + d] = a[i][d];
  }
  std::array<double, env::kNumAgents> q{};
  for (int i = 0; i < env::kNumAgents; ++i) q[i] = critics[i]->forward(in)[0];
  return label_teams(q);
}

nn::Mlp make_controller_net(Rng& rng) {
  return nn::Mlp::random({env::kGlobalDim, 64, 32, 1}, nn::Activation::kRelu,
                         nn::Activation::kSigmoid, rng);
}

int select_policy(const nn::Mlp& controller, const env::GlobalState& view) {
  return controller.forward(view)[0] >= 0.5 ? 1 : 2;
}

double exploration_probability(int episode, double c) {
  if (episode < 1) throw InputError("exploration_probability: episode must be >= 1");
  if (!(c > 0.0)) throw InputError("exploration_probability: C must be positive");
  return std::exp(-static_cast<double>(episode) / c);
}

bool exploration_gate(int episode, double c, Rng& rng) {
  return rng.bernoulli(exploration_probability(episode, c));
}

EnsembleAgent make_ensemble_agent(const maddpg::TrainHyper& hyper, int ensemble_size, Rng& rng) {
  if (ensemble_size != 1 && ensemble_size != 2) throw InputError("ensemble size must be 1 or 2");
  EnsembleAgent a;
  for (int j = 0; j < ensemble_size; ++j) a.policies.push_back(maddpg::make_policy(hyper, rng));
  a.critic = maddpg::make_critic(hyper, rng);
  return a;
}

std::vector<int> partition_columns(const maddpg::BatchTensors& batch, int agent_index, int label) {
  std::vector<int> cols;
  const auto& labels = batch.labels[agent_index];
  for (int k = 0; k < static_cast<int>(labels.size()); ++k) {
    if (labels[k] == label) cols.push_back(k);
  }
  return cols;
}

EnsembleUpdate ensemble_policy_update(EnsembleAgent& agent, const maddpg::BatchTensors& batch,
                                      int agent_index) {
  EnsembleUpdate out;
  if (agent.ensemble_size() == 1) {
    out.columns[0].resize(batch.size());
    std::iota(out.columns[0].begin(), out.columns[0].end(), 0);
    if (batch.size() > 0) {
      out.objective[0] = maddpg::actor_update(agent.policies[0], agent.critic.net, batch, agent_index);
    }
    return out;
  }
  for (int j = 0; j < 2; ++j) {
    out.columns[j] = partition_columns(batch, agent_index, j + 1);
    if (out.columns[j].empty()) continue;
    const maddpg::BatchTensors part = batch.select(out.columns[j]);
    out.objective[j] = maddpg::actor_update(agent.policies[j], agent.critic.net, part, agent_index);
  }
  return out;
}

void ControllerTraining::validate() const {
  if (!(learning_rate > 0.0)) throw InputError("cmaddpg.controller_lr must be positive");
  if (batch <= 0) throw InputError("cmaddpg.controller_batch must be positive");
  if (passes <= 0) throw InputError("cmaddpg.controller_passes must be positive");
}

Controller make_controller(const ControllerTraining& training, Rng& rng) {
  Controller c;
  c.net = make_controller_net(rng);
  c.opt = nn::AdamState::for_net(c.net, {.learning_rate = training.learning_rate});
  return c;
}

nn::Matrix to_matrix(std::span<const LabeledState> pairs) {
  nn::Matrix m(env::kGlobalDim, static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    for (int d = 0; d < env::kGlobalDim; ++d) m(d, static_cast<Eigen::Index>(k)) = pairs[k].view[d];
  }
  return m;
}

nn::Matrix team_view_rows(const nn::Matrix& global, int team) {
  if (global.rows() != env::kGlobalDim) throw ShapeError("team_view_rows: expected 20 rows");
  if (team == 0) return global;
  nn::Matrix v(global.rows(), global.cols());
  v.topRows(8) = global.middleRows(8, 8);
  v.middleRows(8, 8) = global.topRows(8);
  v.bottomRows(4) = global.bottomRows(4);
  return v;
}

maddpg::LossGradient controller_loss_gradient(const nn::Mlp& net, const nn::Matrix& inputs,
                                              std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != inputs.cols()) {
    throw ShapeError("controller_loss_gradient: label count mismatch");
  }
  const nn::ForwardTape tape = net.forward_tape(inputs);
  const double n = static_cast<double>(labels.size());
  nn::Matrix upstream(1, inputs.cols());
  double loss = 0.0;
  for (Eigen::Index k = 0; k < inputs.cols(); ++k) {
    const nn::LossValue lv = nn::cross_entropy(tape.output()(0, k), labels[static_cast<std::size_t>(k)]);
    loss += lv.loss;
    upstream(0, k) = lv.gradient / n;
  }
  maddpg::LossGradient out;
  out.value = loss / n;
  out.grads = net.backward(tape, upstream).grads;
  return out;
}

double controller_loss(const nn::Mlp& net, std::span<const LabeledState> pairs) {
  if (pairs.empty()) return 0.0;
  const nn::Matrix out = net.forward(to_matrix(pairs));
  double loss = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    loss += nn::cross_entropy(out(0, static_cast<Eigen::Index>(k)), pairs[k].label).loss;
  }
  return loss / static_cast<double>(pairs.size());
}

double controller_update(Controller& controller, std::span<const LabeledState> pairs,
                         const ControllerTraining& training, Rng& rng) {
  if (pairs.empty()) return 0.0;
  const double before = controller_loss(controller.net, pairs);
  const nn::Matrix all = to_matrix(pairs);
  std::vector<int> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  for (int pass = 0; pass < training.passes; ++pass) {
    for (std::size_t k = order.size(); k > 1; --k) {
      std::swap(order[k - 1], order[rng.below(k)]);
    }
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(training.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(training.batch));
      const std::vector<int> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                 order.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<int> labels;
      labels.reserve(idx.size());
      for (int i : idx) labels.push_back(pairs[static_cast<std::size_t>(i)].label);
      const nn::Matrix x = all(Eigen::all, idx);
      maddpg::LossGradient lg = controller_loss_gradient(controller.net, x, labels);
      nn::adam_step(controller.net, lg.grads, controller.opt);
    }
  }
  return before;
}

double controller_accuracy(const nn::Mlp& net, std::span<const LabeledState> pairs) {
  if (pairs.empty()) return 0.0;
  const nn::Matrix out = net.forward(to_matrix(pairs));
  std::size_t correct = 0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const int label = out(0, static_cast<Eigen::Index>(k)) >= 0.5 ? 1 : 2;
    if (label == pairs[k].label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

}  // namespace tmlab::cmaddpg
