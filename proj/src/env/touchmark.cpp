#include "tmlab/env/touchmark.hpp"

#include <charconv>
#include <limits>
#include <string>

#include "tmlab/errors.hpp"

namespace tmlab::env {
namespace {

// Other agents in team-relative order: teammate first, then opponents by id.
std::array<int, 3> others_of(int agent) {
  const int opp = 2 * (1 - team_of(agent));
  return {teammate_of(agent), opp, opp + 1};
}

Vec2 clamp_speed(Vec2 v, double max_speed) {
  const double n = v.norm();
  if (n <= max_speed) return v;
  v *= max_speed / n;
  // Rounding can leave the norm a few ulps above the cap.
  while (v.norm() > max_speed) v *= 1.0 - std::numeric_limits<double>::epsilon();
  return v;
}

void append_number(std::string& s, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  s.append(buf, res.ptr);
}

}  // namespace

std::array<double, kNumAgents> WorldState::max_speeds() const {
  std::array<double, kNumAgents> s{};
  for (int i = 0; i < kNumAgents; ++i) s[i] = agents[i].max_speed;
  return s;
}

void EnvConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string("env.") + name + " must be positive");
  };
  positive(board_half_extent, "board_half_extent");
  positive(dt, "dt");
  positive(accel_scale, "accel_scale");
  positive(agent_radius, "agent_radius");
  positive(contact_stiffness, "contact_stiffness");
  positive(landmark_reward, "r_l");
  positive(distance_penalty_scale, "distance_penalty_scale");
  positive(boundary_penalty, "boundary_penalty");
  positive(touch_radius, "touch_radius");
  positive(max_speed_limit, "max_speed_limit");
  positive(skill_rate, "skill_rate");
  if (!(damping > 0.0 && damping < 1.0)) throw InputError("env.damping must lie in (0, 1)");
  if (skill_rate > 1.0) throw InputError("env.skill_rate must not exceed 1");
  if (max_episode_len <= 0) throw InputError("env.max_episode_len must be positive");
  if (!(touch_radius < board_half_extent)) {
    throw InputError("env.touch_radius must be smaller than env.board_half_extent");
  }
  for (double s : initial_max_speeds) {
    if (!(s > 0.0 && s <= max_speed_limit)) {
      throw InputError("env.initial_max_speeds must lie in (0, max_speed_limit]");
    }
  }
}

WorldState reset(const EnvConfig& config, Rng& rng) {
  return reset(config, config.initial_max_speeds, rng);
}

WorldState reset(const EnvConfig& config, const std::array<double, kNumAgents>& max_speeds,
                 Rng& rng) {
  const double h = config.board_half_extent;
  WorldState s;
  for (int i = 0; i < kNumAgents; ++i) {
    AgentState& a = s.agents[i];
    a.id = i;
    a.team = team_of(i);
    a.pos = {rng.uniform(-h, h), rng.uniform(-h, h)};
    a.vel = {};
    a.max_speed = max_speeds[i];
    a.radius = config.agent_radius;
  }
  for (auto& l : s.landmarks) l = {rng.uniform(-h, h), rng.uniform(-h, h)};
  return s;
}

std::pair<WorldState, StepOutcome> step(const WorldState& state, const JointAction& actions,
                                        const EnvConfig& config) {
  if (state.done) throw StateError("step: episode already terminated");
  for (const auto& a : actions) {
    for (double c : a) {
      if (!(c >= -1.0 && c <= 1.0)) throw InputError("step: action component outside [-1, 1]");
    }
  }

  WorldState next = state;
  StepOutcome out;

  // Soft contact: spring force on every overlapping pair, evaluated at the
  // pre-step positions.
  std::array<Vec2, kNumAgents> contact{};
  for (int i = 0; i < kNumAgents; ++i) {
    const AgentState& a = state.agents[i];
    for (int j : others_of(i)) {
      const AgentState& b = state.agents[j];
      const Vec2 delta = a.pos - b.pos;
      const double d = delta.norm();
      const double penetration = a.radius + b.radius - d;
      if (penetration <= 0.0) continue;
      const Vec2 dir = d > 0.0 ? delta * (1.0 / d) : Vec2{i < j ? -1.0 : 1.0, 0.0};
      contact[i] += dir * (config.contact_stiffness * penetration);
      if (team_of(i) != team_of(j) && i < j) out.collisions.emplace_back(i, j);
    }
  }

  for (int i = 0; i < kNumAgents; ++i) {
    AgentState& a = next.agents[i];
    const Vec2 force = Vec2{actions[i][0], actions[i][1]} * config.accel_scale + contact[i];
    a.vel = clamp_speed(a.vel * (1.0 - config.damping) + force * config.dt, a.max_speed);
    a.pos += a.vel * config.dt;
  }
  next.step_index = state.step_index + 1;

  const double h = config.board_half_extent;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kNumAgents; ++i) {
    const double d = nearest_landmark_distance(next, i);
    out.shaping[i] = -config.distance_penalty_scale * d;
    const Vec2 p = next.agents[i].pos;
    if (std::abs(p.x) > h || std::abs(p.y) > h) {
      out.shaping[i] -= config.boundary_penalty;
      out.boundary_violations.push_back(i);
    }
    if (d < config.touch_radius && d < best) {
      best = d;
      out.scorer = i;
    }
  }

  out.rewards = out.shaping;
  if (out.scorer) {
    const int winner = team_of(*out.scorer);
    for (int i = 0; i < kNumAgents; ++i) {
      out.rewards[i] += team_of(i) == winner ? config.landmark_reward : -config.landmark_reward;
    }
    AgentState& s = next.agents[*out.scorer];
    s.max_speed += config.skill_rate * (config.max_speed_limit - s.max_speed);
  }
  out.done = out.scorer.has_value() || next.step_index >= config.max_episode_len;
  next.done = out.done;
  return {next, out};
}

Observation observe(const WorldState& state, int agent_id) {
  if (agent_id < 0 || agent_id >= kNumAgents) throw InputError("observe: invalid agent id");
  const AgentState& self = state.agents[agent_id];
  Observation o{};
  std::size_t k = 0;
  o[k++] = self.pos.x;
  o[k++] = self.pos.y;
  o[k++] = self.vel.x;
  o[k++] = self.vel.y;
  for (const Vec2& l : state.landmarks) {
    o[k++] = l.x - self.pos.x;
    o[k++] = l.y - self.pos.y;
  }
  for (int j : others_of(agent_id)) {
    o[k++] = state.agents[j].pos.x - self.pos.x;
    o[k++] = state.agents[j].pos.y - self.pos.y;
  }
  o[k++] = self.max_speed;
  return o;
}

GlobalState global_state(const WorldState& state) {
  GlobalState g{};
  std::size_t k = 0;
  for (const AgentState& a : state.agents) {
    g[k++] = a.pos.x;
    g[k++] = a.pos.y;
    g[k++] = a.vel.x;
    g[k++] = a.vel.y;
  }
  for (const Vec2& l : state.landmarks) {
    g[k++] = l.x;
    g[k++] = l.y;
  }
  return g;
}

GlobalState team_view(const GlobalState& global, int team) {
  if (team == 0) return global;
  GlobalState v = global;
  for (int k = 0; k < 8; ++k) {
    v[k] = global[8 + k];
    v[8 + k] = global[k];
  }
  return v;
}

double nearest_landmark_distance(const WorldState& state, int agent_id) {
  if (agent_id < 0 || agent_id >= kNumAgents) {
    throw InputError("nearest_landmark_distance: invalid agent id");
  }
  const Vec2 p = state.agents[agent_id].pos;
  return std::min(distance(p, state.landmarks[0]), distance(p, state.landmarks[1]));
}

WorldState swap_team_positions(const WorldState& state) {
  WorldState s = state;
  for (int i = 0; i < 2; ++i) {
    std::swap(s.agents[i].pos, s.agents[i + 2].pos);
    std::swap(s.agents[i].vel, s.agents[i + 2].vel);
  }
  return s;
}

void write_trajectory_header(std::ostream& out) {
  out << "episode,step";
  for (int i = 0; i < kNumAgents; ++i) {
    out << ",a" << i << "_x,a" << i << "_y,a" << i << "_vx,a" << i << "_vy";
  }
  out << ",l0_x,l0_y,l1_x,l1_y,collisions\n";
}

void write_trajectory_row(std::ostream& out, const WorldState& state,
                          const std::vector<std::pair<int, int>>& collisions) {
  std::string row = std::to_string(state.episode_index) + "," + std::to_string(state.step_index);
  for (const AgentState& a : state.agents) {
    for (double v : {a.pos.x, a.pos.y, a.vel.x, a.vel.y}) {
      row += ',';
      append_number(row, v);
    }
  }
  for (const Vec2& l : state.landmarks) {
    for (double v : {l.x, l.y}) {
      row += ',';
      append_number(row, v);
    }
  }
  row += ',';
  for (std::size_t k = 0; k < collisions.size(); ++k) {
    if (k > 0) row += ';';
    row += std::to_string(collisions[k].first) + "-" + std::to_string(collisions[k].second);
  }
  out << row << '\n';
}

}  // namespace tmlab::env
