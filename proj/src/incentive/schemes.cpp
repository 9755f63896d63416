#include "tmlab/incentive/schemes.hpp"

#include <algorithm>
#include <cmath>

#include "tmlab/errors.hpp"

namespace tmlab::incentive {

void RoleAssignment::validate() const {
  if (weak_team != 0 && weak_team != 1) throw InputError("roles.weak_team must be 0 or 1");
  if (weak_agent < 0 || weak_agent >= env::kNumAgents || env::team_of(weak_agent) != weak_team) {
    throw InputError("roles.weak_agent must be a member of roles.weak_team");
  }
}

RoleAssignment assign_roles(const std::array<double, env::kNumAgents>& max_speeds) {
  int weakest = env::kNumAgents - 1;
  for (int i = env::kNumAgents - 2; i >= 0; --i) {
    if (max_speeds[i] < max_speeds[weakest]) weakest = i;
  }
  return {env::team_of(weakest), weakest};
}

std::array<double, env::kNumAgents> terminal_rewards(const IncentiveParams& params, int scorer,
                                                     const RoleAssignment& roles,
                                                     double landmark_reward) {
  if (scorer < 0 || scorer >= env::kNumAgents) throw InputError("terminal_rewards: invalid scorer");
  std::array<double, env::kNumAgents> r{};
  const int winner = env::team_of(scorer);
  double winner_reward = landmark_reward;
  if (winner == roles.weak_team) {
    const double multiplier = scorer == roles.weak_agent ? 1.0 + params.team + params.agent
                                                         : 1.0 + params.team;
    winner_reward = multiplier * landmark_reward;
  }
  for (int i = 0; i < env::kNumAgents; ++i) {
    r[i] = env::team_of(i) == winner ? winner_reward : -landmark_reward;
  }
  return r;
}

StatsWindow::StatsWindow(int length) : length_(length) {
  if (length <= 0) throw InputError("StatsWindow: length must be positive");
}

void StatsWindow::advance(std::optional<int> scorer) {
  if (scorer && (*scorer < 0 || *scorer >= env::kNumAgents)) {
    throw InputError("StatsWindow::advance: invalid scorer");
  }
  history_.push_back(scorer.value_or(-1));
  if (scorer) ++counts_[*scorer];
  if (static_cast<int>(history_.size()) > length_) {
    const int old = history_.front();
    history_.pop_front();
    if (old >= 0) --counts_[old];
  }
}

StatsWindow StatsWindow::restore(int length, const std::deque<int>& history,
                                 const std::array<double, env::kNumAgents>& speeds) {
  StatsWindow w(length);
  for (int s : history) w.advance(s >= 0 ? std::optional<int>(s) : std::nullopt);
  w.speeds_ = speeds;
  return w;
}

NormalizedStats normalize(const std::array<double, env::kNumAgents>& raw) {
  NormalizedStats n;
  n.raw = raw;
  for (double v : raw) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("normalize: raw statistics must be finite and >= 0");
    n.scale = std::max(n.scale, v);
  }
  return n;
}

NormalizedStats normalized_stats(const StatsWindow& window, StatMode mode) {
  std::array<double, env::kNumAgents> raw{};
  for (int i = 0; i < env::kNumAgents; ++i) {
    raw[i] = mode == StatMode::kLandmark ? static_cast<double>(window.counts()[i])
                                         : window.speeds()[i];
  }
  return normalize(raw);
}

IncentiveParams dynamic_alphas(const NormalizedStats& n, const RoleAssignment& roles) {
  if (n.scale <= 0.0) return {};
  const int s = roles.strong_team();
  const int w = roles.weak_team;
  const double team_gap =
      ((n.raw[2 * s] + n.raw[2 * s + 1]) - (n.raw[2 * w] + n.raw[2 * w + 1])) / n.scale;
  const double agent_gap = (n.raw[roles.weak_team_strong_member()] - n.raw[roles.weak_agent]) / n.scale;
  return {std::max(0.0, team_gap), std::max(0.0, agent_gap)};
}

std::string_view to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::kStaticTeam: return "StaticTeam";
    case SchemeKind::kStaticAgent: return "StaticAgent";
    case SchemeKind::kDynamicLandmark: return "DynamicLandmark";
    case SchemeKind::kDynamicSpeed: return "DynamicSpeed";
    case SchemeKind::kTeamRLAgentDynamic: return "TeamRLAgentDynamic";
    case SchemeKind::kTeamDynamicAgentRL: return "TeamDynamicAgentRL";
  }
  return "?";
}

SchemeKind parse_scheme_kind(std::string_view name) {
  for (SchemeKind k : {SchemeKind::kStaticTeam, SchemeKind::kStaticAgent,
                       SchemeKind::kDynamicLandmark, SchemeKind::kDynamicSpeed,
                       SchemeKind::kTeamRLAgentDynamic, SchemeKind::kTeamDynamicAgentRL}) {
    if (to_string(k) == name) return k;
  }
  throw InputError("unknown incentive scheme '" + std::string(name) + "'");
}

void SchemeSpec::validate() const {
  if (!(alpha_team >= 0.0) || !std::isfinite(alpha_team)) throw InputError("scheme.alpha_team must be >= 0");
  if (!(alpha_agent >= 0.0) || !std::isfinite(alpha_agent)) throw InputError("scheme.alpha_agent must be >= 0");
  if (kind == SchemeKind::kStaticTeam && alpha_agent != 0.0) {
    throw InputError("scheme.alpha_agent must be 0 for StaticTeam");
  }
  if (window <= 0) throw InputError("scheme.window must be positive");
}

RlTarget SchemeSpec::rl_target() const {
  switch (kind) {
    case SchemeKind::kTeamRLAgentDynamic: return RlTarget::kTeam;
    case SchemeKind::kTeamDynamicAgentRL: return RlTarget::kAgent;
    default: return RlTarget::kNone;
  }
}

IncentiveScheme::IncentiveScheme(SchemeSpec spec, RoleAssignment roles,
                                 const std::array<double, env::kNumAgents>& initial_speeds)
    : spec_(spec), roles_(roles), window_(spec.window) {
  spec_.validate();
  roles_.validate();
  window_.set_speeds(initial_speeds);
  refresh();
}

void IncentiveScheme::end_episode(std::optional<int> scorer,
                                  const std::array<double, env::kNumAgents>& speeds) {
  window_.advance(scorer);
  window_.set_speeds(speeds);
  refresh();
}

void IncentiveScheme::set_rl_alpha(double alpha) {
  if (spec_.rl_target() == RlTarget::kNone) {
    throw InputError("set_rl_alpha: scheme " + std::string(to_string(spec_.kind)) +
                     " has no RL-controlled incentive");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InputError("set_rl_alpha: alpha must be >= 0");
  rl_alpha_ = alpha;
  refresh();
}

void IncentiveScheme::restore(const StatsWindow& window, double rl_alpha) {
  window_ = window;
  rl_alpha_ = rl_alpha;
  refresh();
}

void IncentiveScheme::refresh() {
  switch (spec_.kind) {
    case SchemeKind::kStaticTeam:
      params_ = {spec_.alpha_team, 0.0};
      break;
    case SchemeKind::kStaticAgent:
      params_ = {spec_.alpha_team, spec_.alpha_agent};
      break;
    case SchemeKind::kDynamicLandmark:
      params_ = dynamic_alphas(normalized_stats(window_, StatMode::kLandmark), roles_);
      break;
    case SchemeKind::kDynamicSpeed:
      params_ = dynamic_alphas(normalized_stats(window_, StatMode::kSpeed), roles_);
      break;
    case SchemeKind::kTeamRLAgentDynamic:
      params_ = {rl_alpha_, dynamic_alphas(normalized_stats(window_, StatMode::kSpeed), roles_).agent};
      break;
    case SchemeKind::kTeamDynamicAgentRL:
      params_ = {dynamic_alphas(normalized_stats(window_, StatMode::kSpeed), roles_).team, rl_alpha_};
      break;
  }
}

}  // namespace tmlab::incentive
