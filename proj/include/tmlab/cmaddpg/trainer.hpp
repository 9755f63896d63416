#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "tmlab/cmaddpg/cmaddpg.hpp"
#include "tmlab/env/touchmark.hpp"
#include "tmlab/eval/metrics.hpp"
#include "tmlab/incentive/schemes.hpp"
#include "tmlab/maddpg/maddpg.hpp"
#include "tmlab/nn/binary_io.hpp"
#include "tmlab/replay/replay_buffer.hpp"
#include "tmlab/rng.hpp"

namespace tmlab::cmaddpg {

enum class Algorithm { kMaddpg, kCmaddpg };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

struct CmaddpgHyper {
  maddpg::TrainHyper train;
  double exploration_c = 0.0;  // 0 selects planned_episodes / 5
  int tau = 20;                // episodes between controller updates
  ControllerTraining controller;
  std::size_t controller_window = 50'000;

  void validate() const;
};

// kFrozen acts exactly like training but never updates a network;
// kUniformRandom ignores the networks and acts uniformly in [-1, 1]^2.
enum class Behavior { kLearn, kFrozen, kUniformRandom };

struct TrainConfig {
  Algorithm algorithm = Algorithm::kCmaddpg;
  env::EnvConfig env;
  CmaddpgHyper hyper;
  incentive::SchemeSpec scheme;
  std::optional<incentive::RoleAssignment> roles;  // default: from initial speeds
  int planned_episodes = 0;                        // M, used for the default C
  Behavior behavior = Behavior::kLearn;
  bool audit = false;  // record ensemble partition bookkeeping

  void validate() const;
  double exploration_constant() const;
};

// Bookkeeping of which replay samples each policy consumed.
struct PartitionAudit {
  std::array<std::uint64_t, env::kNumAgents> consumed{};
  std::array<std::array<std::uint64_t, 2>, env::kNumAgents> per_policy{};
  std::array<std::uint64_t, env::kNumAgents> consumed_serial_sum{};
  std::array<std::array<std::uint64_t, 2>, env::kNumAgents> per_policy_serial_sum{};
  std::uint64_t wrong_label = 0;       // a column given to the policy of another label
  std::uint64_t overlapping = 0;       // a column given to both policies
  std::uint64_t dropped = 0;           // a column given to neither policy
  std::uint64_t skipped_changed = 0;   // a policy with an empty part that still moved
  std::uint64_t update_rounds = 0;
};

// A team's acting parts, detached from training: per member its ensemble
// of actors and the shared controller (absent for plain MADDPG).
struct TeamPolicy {
  std::array<std::vector<nn::Mlp>, 2> actors;
  std::optional<nn::Mlp> controller;
  std::array<double, 2> speeds{};  // members' max speeds

  // Controller label for a team view of the state; 1 without a controller.
  int label(const env::GlobalState& view) const;
  env::Action act(int member, const env::Observation& obs, int label) const;
};

// The training loop for both algorithms. MADDPG is the one-policy case
// with no controller.
class Trainer {
 public:
  Trainer(TrainConfig config, std::uint64_t seed);

  const TrainConfig& config() const { return config_; }

  // Plays and learns from one episode; returns its metrics row.
  const eval::MetricsRow& run_episode();
  void run(int episodes);

  int episodes_done() const { return episode_; }
  const eval::MetricsLog& log() const { return log_; }
  const std::array<double, env::kNumAgents>& speeds() const { return speeds_; }
  incentive::IncentiveScheme& scheme() { return scheme_; }
  const incentive::IncentiveScheme& scheme() const { return scheme_; }
  const std::array<EnsembleAgent, env::kNumAgents>& agents() const { return agents_; }
  const std::array<Controller, env::kNumTeams>& controllers() const { return controllers_; }
  const replay::ReplayBuffer& buffer() const { return buffer_; }
  const PartitionAudit& audit() const { return audit_; }
  double noise_std() const { return noise_; }
  // Controller labels of each team at every step of the last episode.
  const std::vector<std::array<int, env::kNumTeams>>& last_episode_labels() const {
    return last_labels_;
  }
  const std::deque<LabeledState>& controller_pairs(int team) const { return pairs_[team]; }

  TeamPolicy team_policy(int team) const;

  // Full training state: networks, optimizers, buffers, incentive window,
  // counters, rng and the metrics log so far.
  void save(nn::BinaryWriter& w) const;
  // Restores into a trainer constructed from the same config.
  void load(nn::BinaryReader& r);

 private:
  env::JointAction choose_actions(const env::WorldState& world, int episode,
                                  std::array<int, env::kNumTeams>& labels);
  void update_round();

  TrainConfig config_;
  Rng rng_;
  int ensemble_size_;
  double exploration_c_;
  std::array<EnsembleAgent, env::kNumAgents> agents_;
  std::array<Controller, env::kNumTeams> controllers_;
  std::array<std::deque<LabeledState>, env::kNumTeams> pairs_;
  replay::ReplayBuffer buffer_;
  incentive::IncentiveScheme scheme_;
  std::array<double, env::kNumAgents> speeds_;
  double noise_;
  int episode_ = 0;
  std::uint64_t total_steps_ = 0;
  eval::MetricsLog log_;
  PartitionAudit audit_;
  std::vector<std::array<int, env::kNumTeams>> last_labels_;
};

}  // namespace tmlab::cmaddpg
