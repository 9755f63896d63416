#include "tmlab/eval/evaluation.hpp"

#include <cmath>
#include <numeric>

#include "tmlab/errors.hpp"

namespace tmlab::eval {
namespace {

void check_window(const MetricsLog& log, int window) {
  if (window <= 0) throw InputError("window must be positive");
  if (static_cast<int>(log.size()) < window) {
    throw InputError("log has " + std::to_string(log.size()) + " episodes, fewer than the window of " +
                     std::to_string(window));
  }
}

void play(const cmaddpg::TeamPolicy& a, const cmaddpg::TeamPolicy& b, env::WorldState world,
          const env::EnvConfig& config, PairedEvalReport& report) {
  const std::array<const cmaddpg::TeamPolicy*, 2> sides{&a, &b};
  bool scored = false;
  while (!world.done) {
    const env::GlobalState x = env::global_state(world);
    env::JointAction actions{};
    for (int k = 0; k < env::kNumTeams; ++k) {
      const int label = sides[k]->label(env::team_view(x, k));
      for (int m = 0; m < 2; ++m) {
        const int agent = 2 * k + m;
        actions[agent] = sides[k]->act(m, env::observe(world, agent), label);
      }
    }
    auto [next, out] = env::step(world, actions, config);
    report.collisions += static_cast<int>(out.collisions.size());
    if (out.scorer) {
      ++report.agent_goals[*out.scorer];
      ++report.team_goals[env::team_of(*out.scorer)];
      scored = true;
    }
    world = std::move(next);
  }
  if (!scored) ++report.no_goal;
  ++report.episodes;
}

}  // namespace

PairedEvalReport PairedEvalReport::mirrored() const {
  PairedEvalReport m = *this;
  m.team_goals = {team_goals[1], team_goals[0]};
  m.agent_goals = {agent_goals[2], agent_goals[3], agent_goals[0], agent_goals[1]};
  return m;
}

PairedEvalReport paired_eval(const cmaddpg::TeamPolicy& side_a, const cmaddpg::TeamPolicy& side_b,
                             int n_configs, const env::EnvConfig& config, Rng& rng) {
  if (n_configs < 0) throw InputError("paired_eval: n_configs must be >= 0");
  config.validate();
  const std::array<double, env::kNumAgents> speeds{side_a.speeds[0], side_a.speeds[1],
                                                   side_b.speeds[0], side_b.speeds[1]};
  PairedEvalReport report;
  for (int c = 0; c < n_configs; ++c) {
    const env::WorldState start = env::reset(config, speeds, rng);
    play(side_a, side_b, start, config, report);
    play(side_a, side_b, env::swap_team_positions(start), config, report);
  }
  return report;
}

double normalized_weak_share(int weak_goals, int team_goals) {
  if (team_goals <= 0) return 0.0;
  return static_cast<double>(weak_goals) / team_goals;
}

TournamentResult tournament(std::span<const TournamentEntry> entries, int n_configs,
                            const env::EnvConfig& config, Rng& rng) {
  if (entries.size() < 2) throw InputError("tournament needs at least 2 entries");
  for (const auto& e : entries) {
    if (e.weak_member != 0 && e.weak_member != 1) throw InputError("tournament: weak_member must be 0 or 1");
  }
  const int n = static_cast<int>(entries.size());
  TournamentResult result;
  result.normalized_weak_rate.assign(entries.size(), 0.0);
  std::vector<int> matches(entries.size(), 0);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      MatchResult m{a, b, paired_eval(entries[a].team, entries[b].team, n_configs, config, rng)};
      const auto& r = m.report;
      result.normalized_weak_rate[a] +=
          normalized_weak_share(r.agent_goals[entries[a].weak_member], r.team_goals[0]);
      result.normalized_weak_rate[b] +=
          normalized_weak_share(r.agent_goals[2 + entries[b].weak_member], r.team_goals[1]);
      ++matches[a];
      ++matches[b];
      result.matches.push_back(std::move(m));
    }
  }
  for (int i = 0; i < n; ++i) result.normalized_weak_rate[i] /= matches[i];
  return result;
}

std::array<double, env::kNumAgents> landmark_rates(const MetricsLog& log, int window) {
  check_window(log, window);
  std::array<long, env::kNumAgents> counts{};
  for (auto it = log.end() - window; it != log.end(); ++it) {
    for (int i = 0; i < env::kNumAgents; ++i) counts[i] += it->landmark[i];
  }
  std::array<double, env::kNumAgents> rates{};
  for (int i = 0; i < env::kNumAgents; ++i) rates[i] = static_cast<double>(counts[i]) / window;
  return rates;
}

double fairness_stddev(const MetricsLog& log, int window) {
  const auto rates = landmark_rates(log, window);
  const double mean = std::accumulate(rates.begin(), rates.end(), 0.0) / env::kNumAgents;
  double ss = 0.0;
  for (double r : rates) ss += (r - mean) * (r - mean);
  return std::sqrt(ss / env::kNumAgents);
}

Interval confidence_interval(std::span<const double> values) {
  if (values.size() < 2) throw InputError("confidence_interval needs at least 2 values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double s = std::sqrt(ss / (n - 1.0));
  return {mean, 1.96 * s / std::sqrt(n)};
}

FairnessSummary fairness_summary(std::span<const MetricsLog> logs, int window) {
  if (logs.empty()) throw InputError("fairness_summary: no logs");
  FairnessSummary s;
  for (const auto& log : logs) s.per_seed.push_back(fairness_stddev(log, window));
  if (s.per_seed.size() >= 2) {
    s.interval = confidence_interval(s.per_seed);
  } else {
    s.interval = {s.per_seed[0], 0.0};
  }
  return s;
}

std::array<double, env::kNumTeams> win_policy_usage(const MetricsLog& log, int window) {
  check_window(log, window);
  std::array<double, env::kNumTeams> usage{};
  for (auto it = log.end() - window; it != log.end(); ++it) {
    for (int k = 0; k < env::kNumTeams; ++k) usage[k] += it->win_policy[k];
  }
  for (double& u : usage) u /= window;
  return usage;
}

std::array<double, env::kNumTeams> win_policy_usage(
    std::span<const std::array<int, env::kNumTeams>> step_labels) {
  std::array<double, env::kNumTeams> usage{};
  if (step_labels.empty()) return usage;
  for (const auto& l : step_labels) {
    for (int k = 0; k < env::kNumTeams; ++k) usage[k] += l[k] == 1 ? 1.0 : 0.0;
  }
  for (double& u : usage) u /= static_cast<double>(step_labels.size());
  return usage;
}

}  // namespace tmlab::eval
