#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tmlab/cmaddpg/trainer.hpp"
#include "tmlab/incentive/schemes.hpp"
#include "tmlab/maddpg/maddpg.hpp"
#include "tmlab/nn/binary_io.hpp"
#include "tmlab/nn/mlp.hpp"
#include "tmlab/nn/optim.hpp"
#include "tmlab/rng.hpp"

namespace tmlab::incentive {

inline constexpr int kSacStateDim = env::kNumAgents;

struct SacConfig {
  int apply_period = 250;  // K: episodes per held action
  double alpha_max = 2.0;
  int pretrain_episodes = 0;
  double gamma = 0.99;
  double learning_rate = 3e-4;
  double polyak = 0.005;
  int batch = 256;
  double temperature = 0.2;
  std::vector<int> hidden{64, 64};
  std::size_t buffer_capacity = 100'000;
  int warmup = 4;             // transitions stored before updates begin
  int updates_per_block = 64; // gradient rounds after each new transition

  void validate() const;
};

// One held incentive decision: s, the squashed action in (-1, 1), the
// block reward and the speeds after the block.
struct SacTransition {
  std::array<double, kSacStateDim> state{};
  double action = 0.0;
  double reward = 0.0;
  std::array<double, kSacStateDim> next_state{};

  friend bool operator==(const SacTransition&, const SacTransition&) = default;
};

struct SacAgent {
  nn::Mlp policy;  // state -> (mean, log_std)
  nn::Mlp q1, q2;  // (state, action) -> value
  nn::Mlp q1_target, q2_target;
  nn::AdamState policy_opt, q1_opt, q2_opt;
  std::vector<SacTransition> replay;  // ring, oldest slot overwritten once full
  std::size_t replay_cursor = 0;
  std::uint64_t transitions_seen = 0;

  void remember(const SacTransition& t, std::size_t capacity);
};

SacAgent make_sac_agent(const SacConfig& config, Rng& rng);

// Max speeds divided by the global speed limit, in agent id order.
std::array<double, kSacStateDim> observe_speeds(const std::array<double, env::kNumAgents>& speeds,
                                                double max_speed_limit);

struct IncentiveAction {
  double raw = 0.0;    // squashed action in (-1, 1)
  double alpha = 0.0;  // (raw + 1) / 2 * alpha_max
};

IncentiveAction incentive_action(const SacAgent& agent, const std::array<double, kSacStateDim>& s,
                                 double alpha_max, Rng& rng, bool deterministic);

// Signed normalized gap over a block of landmark counts: team mode compares
// team sums (team 0 minus team 1), agent mode compares the weak team's
// other member with the weak agent.
double performance_gap(const std::array<int, env::kNumAgents>& block_counts, RlTarget which,
                       const RoleAssignment& roles);

// -|performance_gap|.
double incentive_reward(const std::array<int, env::kNumAgents>& block_counts, RlTarget which,
                        const RoleAssignment& roles);

// Batch views: states are 4 x B, actions, rewards and noise are 1 x B.
struct SacBatch {
  nn::Matrix states;
  nn::Matrix actions;
  nn::Matrix rewards;
  nn::Matrix next_states;

  int size() const { return static_cast<int>(states.cols()); }
};

SacBatch to_batch(const std::vector<SacTransition>& items);

// Mean squared error of q against targets y.
maddpg::LossGradient sac_q_loss_gradient(const nn::Mlp& q, const nn::Matrix& states,
                                         const nn::Matrix& actions, const nn::Matrix& y);

// mean over the batch of temperature * log pi(a|s) - min(q1, q2)(s, a) with
// a = tanh(mean + exp(log_std) * noise); gradient with respect to the
// policy parameters.
maddpg::LossGradient sac_policy_loss_gradient(const nn::Mlp& policy, const nn::Mlp& q1,
                                              const nn::Mlp& q2, const nn::Matrix& states,
                                              const nn::Matrix& noise, double temperature);

// r + gamma * (min target Q(s', a') - temperature * log pi(a'|s')), a' drawn
// with the given noise.
nn::Matrix sac_targets(const SacAgent& agent, const SacBatch& batch, const nn::Matrix& next_noise,
                       const SacConfig& config);

struct SacLosses {
  double q1 = 0.0;
  double q2 = 0.0;
  double policy = 0.0;
};

// One twin-Q step, one policy step, then Polyak averaging of the targets.
SacLosses sac_update(SacAgent& agent, const SacBatch& batch, const SacConfig& config, Rng& rng);

struct BlockRecord {
  int first_episode = 0;  // 1-based
  double alpha = 0.0;
  double gap = 0.0;       // signed performance gap over the block
  double reward = 0.0;
};

struct PretrainResult {
  SacAgent agent;
  std::vector<BlockRecord> blocks;
  eval::MetricsLog log;
};

// Trains the SAC incentive agent alongside a C-MADDPG run: each block of K
// episodes holds one sampled alpha, the block's landmark counts give the
// reward, and the agent learns off-policy. The scheme in `train` must have
// an RL-controlled alpha.
PretrainResult pretrain(const cmaddpg::TrainConfig& train, const SacConfig& config, int episodes,
                        std::uint64_t seed);

// Runs `episodes` episodes with alpha set from the frozen agent's
// deterministic action at every K-episode boundary.
void run_with_frozen_agent(cmaddpg::Trainer& trainer, const SacAgent& agent,
                           const SacConfig& config, int episodes);

void write_sac(nn::BinaryWriter& w, const SacAgent& agent);
SacAgent read_sac(nn::BinaryReader& r);

}  // namespace tmlab::incentive
