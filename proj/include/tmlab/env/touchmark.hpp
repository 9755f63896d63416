#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "tmlab/rng.hpp"

namespace tmlab::env {

inline constexpr int kNumAgents = 4;
inline constexpr int kNumTeams = 2;
inline constexpr int kNumLandmarks = 2;
inline constexpr int kActionDim = 2;
inline constexpr int kObsDim = 15;
inline constexpr int kGlobalDim = 20;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
  friend Vec2 operator+(Vec2 a, Vec2 b) { return a += b; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return a -= b; }
  friend Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend bool operator==(Vec2, Vec2) = default;

  double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

inline constexpr int team_of(int agent) { return agent / 2; }
inline constexpr int teammate_of(int agent) { return agent ^ 1; }

struct AgentState {
  int id = 0;
  int team = 0;
  Vec2 pos;
  Vec2 vel;
  double max_speed = 1.0;
  double radius = 0.05;

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct WorldState {
  std::array<AgentState, kNumAgents> agents;
  std::array<Vec2, kNumLandmarks> landmarks;
  int step_index = 0;
  int episode_index = 0;
  bool done = false;

  std::array<double, kNumAgents> max_speeds() const;

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

// Physics and reward constants. Defaults give a 3x3 board, r_l = 30 and a
// global speed limit of 5.
struct EnvConfig {
  double board_half_extent = 1.5;
  double dt = 0.1;
  double damping = 0.25;
  double accel_scale = 20.0;
  double agent_radius = 0.05;
  double contact_stiffness = 100.0;
  double landmark_reward = 30.0;  // r_l
  double distance_penalty_scale = 0.1;
  double boundary_penalty = 1.0;
  double touch_radius = 0.1;
  double max_speed_limit = 5.0;  // MAX_SPEED
  double skill_rate = 0.01;      // eta
  int max_episode_len = 50;      // T
  std::array<double, kNumAgents> initial_max_speeds{4.0, 4.0, 4.0, 4.0};

  // Throws InputError naming the first offending field.
  void validate() const;
};

using Action = std::array<double, kActionDim>;
using JointAction = std::array<Action, kNumAgents>;
using Observation = std::array<double, kObsDim>;
using GlobalState = std::array<double, kGlobalDim>;

struct StepOutcome {
  // Per-step shaping (distance and boundary penalties) plus the base +-r_l
  // terminal exchange.
  std::array<double, kNumAgents> rewards{};
  // Shaping only; incentive schemes add their own terminal component to this.
  std::array<double, kNumAgents> shaping{};
  std::optional<int> scorer;
  std::vector<std::pair<int, int>> collisions;  // cross-team overlaps, (low id, high id)
  std::vector<int> boundary_violations;
  bool done = false;
};

WorldState reset(const EnvConfig& config, Rng& rng);
// Same as above with explicit per-agent max speeds (skill carried over
// between episodes by the training loop).
WorldState reset(const EnvConfig& config, const std::array<double, kNumAgents>& max_speeds,
                 Rng& rng);

// Advances one time step. Pure: identical arguments give identical results.
// Throws InputError for actions outside [-1, 1] and StateError on a
// terminal state.
std::pair<WorldState, StepOutcome> step(const WorldState& state, const JointAction& actions,
                                        const EnvConfig& config);

// Layout: own pos (2), own vel (2), landmarks relative to self (4), teammate
// then the two opponents in id order, relative to self (6), own max_speed (1).
Observation observe(const WorldState& state, int agent_id);

// Layout: agents 0..3 as (pos, vel), then the two landmarks.
GlobalState global_state(const WorldState& state);

// Global state with the given team's agents listed first; for team 0 this is
// global_state itself. Lets a team-level network ignore which side it plays.
GlobalState team_view(const GlobalState& global, int team);

double nearest_landmark_distance(const WorldState& state, int agent_id);

// Exchanges the starting positions of the two teams (agent 0 <-> 2, 1 <-> 3).
WorldState swap_team_positions(const WorldState& state);

// Trajectory snapshot CSV: one row per step.
void write_trajectory_header(std::ostream& out);
void write_trajectory_row(std::ostream& out, const WorldState& state,
                          const std::vector<std::pair<int, int>>& collisions);

}  // namespace tmlab::env
