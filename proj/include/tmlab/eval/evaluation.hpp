#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tmlab/cmaddpg/trainer.hpp"
#include "tmlab/env/touchmark.hpp"
#include "tmlab/eval/metrics.hpp"
#include "tmlab/rng.hpp"

namespace tmlab::eval {

// Side A plays agents 0/1 and side B agents 2/3 in both episodes of a pair;
// the second episode starts from the first with team positions exchanged.
struct PairedEvalReport {
  int episodes = 0;
  std::array<int, 2> team_goals{};                  // goals by side A, side B
  std::array<int, env::kNumAgents> agent_goals{};   // A0, A1, B0, B1
  int no_goal = 0;
  int collisions = 0;

  double team_rate(int side) const { return episodes ? static_cast<double>(team_goals[side]) / episodes : 0.0; }
  double agent_rate(int slot) const { return episodes ? static_cast<double>(agent_goals[slot]) / episodes : 0.0; }
  double collision_rate() const { return episodes ? static_cast<double>(collisions) / episodes : 0.0; }
  // Same statistics with the two sides exchanged.
  PairedEvalReport mirrored() const;

  friend bool operator==(const PairedEvalReport&, const PairedEvalReport&) = default;
};

// Deterministic policies, controllers active, each side at its own frozen
// speeds. Plays exactly 2 * n_configs episodes.
PairedEvalReport paired_eval(const cmaddpg::TeamPolicy& side_a, const cmaddpg::TeamPolicy& side_b,
                             int n_configs, const env::EnvConfig& config, Rng& rng);

struct TournamentEntry {
  std::string name;
  cmaddpg::TeamPolicy team;
  int weak_member = 1;  // 0 or 1 within the team
};

struct MatchResult {
  int a = 0;  // entry indices
  int b = 0;
  PairedEvalReport report;
};

struct TournamentResult {
  std::vector<MatchResult> matches;
  // Per entry: weak-member goals / team goals, averaged over its matches
  // (0 for a match in which the team never scored).
  std::vector<double> normalized_weak_rate;
};

// Round robin over every unordered pair of entries.
TournamentResult tournament(std::span<const TournamentEntry> entries, int n_configs,
                            const env::EnvConfig& config, Rng& rng);

// Weak-member share of a team's goals; 0 when the team never scored.
double normalized_weak_share(int weak_goals, int team_goals);

// Population standard deviation of the four agents' per-episode landmark
// rates over the last `window` rows.
double fairness_stddev(const MetricsLog& log, int window);

struct Interval {
  double mean = 0.0;
  double half_width = 0.0;
};

// mean +- 1.96 * s / sqrt(n) with the sample standard deviation s.
Interval confidence_interval(std::span<const double> values);

struct FairnessSummary {
  std::vector<double> per_seed;
  Interval interval;  // half_width is 0 for a single seed
};

FairnessSummary fairness_summary(std::span<const MetricsLog> logs, int window);

// Mean of the logged per-episode win-policy fractions over the last
// `window` rows, per team.
std::array<double, env::kNumTeams> win_policy_usage(const MetricsLog& log, int window);

// Fraction of steps with controller label 1, per team.
std::array<double, env::kNumTeams> win_policy_usage(
    std::span<const std::array<int, env::kNumTeams>> step_labels);

// Mean of each per-episode landmark indicator over the last `window` rows.
std::array<double, env::kNumAgents> landmark_rates(const MetricsLog& log, int window);

}  // namespace tmlab::eval
