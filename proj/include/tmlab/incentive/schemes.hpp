#pragma once

#include <array>
#include <deque>
#include <optional>
#include <string>
#include <string_view>

#include "tmlab/env/touchmark.hpp"

namespace tmlab::incentive {

// Which team and which of its members count as "weak" for a whole run.
struct RoleAssignment {
  int weak_team = 1;
  int weak_agent = 3;

  int strong_team() const { return 1 - weak_team; }
  // The other member of the weak team.
  int weak_team_strong_member() const { return env::teammate_of(weak_agent); }

  void validate() const;
  friend bool operator==(const RoleAssignment&, const RoleAssignment&) = default;
};

// The slowest agent is the weak agent and its team the weak team; ties go
// to the highest id, so equal speeds give team 1 / agent 3.
RoleAssignment assign_roles(const std::array<double, env::kNumAgents>& max_speeds);

// Incentive multipliers alpha_T (team) and alpha_A (agent), both >= 0.
struct IncentiveParams {
  double team = 0.0;
  double agent = 0.0;

  friend bool operator==(const IncentiveParams&, const IncentiveParams&) = default;
};

// Terminal reward exchange for a goal by `scorer`. A strong-team goal pays
// +r_l / -r_l. A weak-team goal pays the weak members (1 + alpha_T) r_l, or
// (1 + alpha_T + alpha_A) r_l when the weak agent scores; the strong members
// always receive the base -r_l.
std::array<double, env::kNumAgents> terminal_rewards(const IncentiveParams& params, int scorer,
                                                     const RoleAssignment& roles,
                                                     double landmark_reward);

// Sliding record of which agent scored in each of the last W episodes, plus
// the agents' current max speeds.
class StatsWindow {
 public:
  explicit StatsWindow(int length = 1000);

  // Slides by one episode.
  void advance(std::optional<int> scorer);
  void set_speeds(const std::array<double, env::kNumAgents>& speeds) { speeds_ = speeds; }

  int length() const { return length_; }
  int episodes() const { return static_cast<int>(history_.size()); }
  const std::array<int, env::kNumAgents>& counts() const { return counts_; }
  const std::array<double, env::kNumAgents>& speeds() const { return speeds_; }
  const std::deque<int>& history() const { return history_; }  // -1 marks no scorer

  // Rebuilds a window from a stored history (oldest first).
  static StatsWindow restore(int length, const std::deque<int>& history,
                             const std::array<double, env::kNumAgents>& speeds);

 private:
  int length_;
  std::deque<int> history_;
  std::array<int, env::kNumAgents> counts_{};
  std::array<double, env::kNumAgents> speeds_{};
};

enum class StatMode { kLandmark, kSpeed };

// Per-agent values n_i = raw_i / max_j raw_j and per-team sums. Raw values
// and the common scale are kept so that differences are formed before the
// division.
struct NormalizedStats {
  std::array<double, env::kNumAgents> raw{};
  double scale = 0.0;  // max raw value; 0 means all n are 0

  double agent(int i) const { return scale > 0.0 ? raw[i] / scale : 0.0; }
  double team(int t) const {
    return scale > 0.0 ? (raw[2 * t] + raw[2 * t + 1]) / scale : 0.0;
  }
};

NormalizedStats normalize(const std::array<double, env::kNumAgents>& raw);
NormalizedStats normalized_stats(const StatsWindow& window, StatMode mode);

// alpha_T = max(0, n_T(strong) - n_T(weak)),
// alpha_A = max(0, n_A(weak team's strong member) - n_A(weak agent)).
IncentiveParams dynamic_alphas(const NormalizedStats& n, const RoleAssignment& roles);

enum class SchemeKind {
  kStaticTeam,
  kStaticAgent,
  kDynamicLandmark,
  kDynamicSpeed,
  kTeamRLAgentDynamic,
  kTeamDynamicAgentRL,
};

std::string_view to_string(SchemeKind kind);
// Accepts the table names, e.g. "StaticAgent" or "TeamDynamicAgentRL".
SchemeKind parse_scheme_kind(std::string_view name);

enum class RlTarget { kNone, kTeam, kAgent };

struct SchemeSpec {
  SchemeKind kind = SchemeKind::kStaticTeam;
  double alpha_team = 0.0;   // static schemes
  double alpha_agent = 0.0;  // StaticAgent only
  int window = 1000;

  void validate() const;
  // Which alpha an RL controller supplies under this scheme.
  RlTarget rl_target() const;
};

// Live incentive state owned by the training loop. Dynamic values are
// recomputed once per episode.
class IncentiveScheme {
 public:
  IncentiveScheme(SchemeSpec spec, RoleAssignment roles,
                  const std::array<double, env::kNumAgents>& initial_speeds);

  const SchemeSpec& spec() const { return spec_; }
  const RoleAssignment& roles() const { return roles_; }
  const StatsWindow& window() const { return window_; }
  const IncentiveParams& current() const { return params_; }

  std::array<double, env::kNumAgents> terminal(int scorer, double landmark_reward) const {
    return terminal_rewards(params_, scorer, roles_, landmark_reward);
  }

  // Records the finished episode and refreshes dynamic alphas.
  void end_episode(std::optional<int> scorer, const std::array<double, env::kNumAgents>& speeds);

  // Sets the alpha supplied by an RL controller; InputError if the scheme has
  // no RL-controlled alpha.
  void set_rl_alpha(double alpha);
  double rl_alpha() const { return rl_alpha_; }

  // Checkpoint support.
  void restore(const StatsWindow& window, double rl_alpha);

 private:
  void refresh();

  SchemeSpec spec_;
  RoleAssignment roles_;
  StatsWindow window_;
  double rl_alpha_ = 0.0;
  IncentiveParams params_;
};

}  // namespace tmlab::incentive
