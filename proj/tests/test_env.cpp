#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tmlab/env/touchmark.hpp"
#include "tmlab/errors.hpp"

using namespace tmlab;
using namespace tmlab::env;

namespace {

// Agents far apart and away from both landmarks.
WorldState quiet_state() {
  WorldState s;
  const Vec2 spots[4] = {{-1.0, -1.0}, {-1.0, 1.0}, {1.0, -1.0}, {1.0, 1.0}};
  for (int i = 0; i < kNumAgents; ++i) {
    s.agents[i].id = i;
    s.agents[i].team = team_of(i);
    s.agents[i].pos = spots[i];
    s.agents[i].max_speed = 4.0;
  }
  s.landmarks = {Vec2{0.0, 0.0}, Vec2{0.5, 0.0}};
  return s;
}

JointAction zero_actions() { return {}; }

}  // namespace

TEST_CASE("reset: zero velocities, positions on the board, deterministic") {
  EnvConfig cfg;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng a(seed), b(seed);
    const WorldState s = reset(cfg, a);
    CHECK(s == reset(cfg, b));
    for (const auto& ag : s.agents) {
      CHECK(ag.vel == Vec2{});
      CHECK(std::abs(ag.pos.x) <= 1.5);
      CHECK(std::abs(ag.pos.y) <= 1.5);
    }
    for (const auto& l : s.landmarks) {
      CHECK(std::abs(l.x) <= 1.5);
      CHECK(std::abs(l.y) <= 1.5);
    }
    CHECK(s.step_index == 0);
    CHECK_FALSE(s.done);
  }
}

TEST_CASE("reset with carried-over speeds") {
  EnvConfig cfg;
  Rng rng(1);
  const WorldState s = reset(cfg, {4.0, 4.5, 3.0, 2.0}, rng);
  CHECK(s.max_speeds() == std::array<double, 4>{4.0, 4.5, 3.0, 2.0});
}

TEST_CASE("zero actions from rest: nothing moves, rewards are distance penalties") {
  EnvConfig cfg;
  const WorldState s = quiet_state();
  const auto [next, out] = step(s, zero_actions(), cfg);
  for (int i = 0; i < kNumAgents; ++i) {
    CHECK(next.agents[i].pos == s.agents[i].pos);
    CHECK(out.rewards[i] == -0.1 * nearest_landmark_distance(s, i));
    CHECK(out.shaping[i] == out.rewards[i]);
  }
  CHECK_FALSE(out.scorer.has_value());
  CHECK_FALSE(out.done);
  CHECK(next.step_index == 1);
}

TEST_CASE("a goal by agent 0 pays +r_l to team 0 and -r_l to team 1") {
  EnvConfig cfg;
  WorldState s = quiet_state();
  s.agents[0].pos = {0.01, 0.0};
  const auto [next, out] = step(s, zero_actions(), cfg);
  REQUIRE(out.scorer.has_value());
  CHECK(*out.scorer == 0);
  CHECK(out.done);
  CHECK(next.done);
  CHECK(out.rewards[0] == out.shaping[0] + 30.0);
  CHECK(out.rewards[1] == out.shaping[1] + 30.0);
  CHECK(out.rewards[2] == out.shaping[2] - 30.0);
  CHECK(out.rewards[3] == out.shaping[3] - 30.0);
  CHECK_THROWS_AS(step(next, zero_actions(), cfg), StateError);
}

TEST_CASE("skill update on the scorer only") {
  EnvConfig cfg;
  WorldState s = quiet_state();
  s.agents[2].pos = {0.5, 0.02};
  const auto [next, out] = step(s, zero_actions(), cfg);
  REQUIRE(out.scorer == 2);
  CHECK(next.agents[2].max_speed == doctest::Approx(4.01).epsilon(1e-15));
  CHECK(next.agents[0].max_speed == 4.0);
  CHECK(next.agents[1].max_speed == 4.0);
  CHECK(next.agents[3].max_speed == 4.0);

  WorldState capped = quiet_state();
  capped.agents[2].pos = {0.5, 0.02};
  capped.agents[2].max_speed = cfg.max_speed_limit;
  CHECK(step(capped, zero_actions(), cfg).first.agents[2].max_speed == cfg.max_speed_limit);
}

TEST_CASE("simultaneous touches go to the closest agent, then the lowest id") {
  EnvConfig cfg;
  WorldState s = quiet_state();
  s.agents[3].pos = {0.0, 0.05};
  s.agents[1].pos = {0.5, 0.05};
  CHECK(step(s, zero_actions(), cfg).second.scorer == 1);
  s.agents[3].pos = {0.0, 0.03};
  CHECK(step(s, zero_actions(), cfg).second.scorer == 3);
}

TEST_CASE("velocity update, speed clamp and damping") {
  EnvConfig cfg;
  WorldState s = quiet_state();
  s.agents[0].vel = {1.0, 0.0};
  JointAction a{};
  a[0] = {0.5, 0.0};
  const auto next = step(s, a, cfg).first;
  // 1 * 0.75 + 0.5 * 20 * 0.1 = 1.75
  CHECK(next.agents[0].vel.x == doctest::Approx(1.75));
  CHECK(next.agents[0].pos.x == doctest::Approx(-1.0 + 0.175));

  a[0] = {1.0, 1.0};
  WorldState fast = s;
  for (int k = 0; k < 10; ++k) {
    fast = step(fast, a, cfg).first;
    CHECK(fast.agents[0].vel.norm() <= fast.agents[0].max_speed);
  }
  CHECK(fast.agents[0].vel.norm() == doctest::Approx(4.0));
}

TEST_CASE("actions outside [-1, 1] are rejected") {
  EnvConfig cfg;
  JointAction a{};
  a[2] = {0.0, 1.5};
  CHECK_THROWS_AS(step(quiet_state(), a, cfg), InputError);
  a[2] = {std::nan(""), 0.0};
  CHECK_THROWS_AS(step(quiet_state(), a, cfg), InputError);
}

TEST_CASE("boundary penalty") {
  EnvConfig cfg;
  WorldState s = quiet_state();
  s.agents[1].pos = {-1.6, 0.0};
  const auto out = step(s, zero_actions(), cfg).second;
  CHECK(out.boundary_violations == std::vector<int>{1});
  CHECK(out.shaping[1] == doctest::Approx(-0.1 * nearest_landmark_distance(s, 1) - 1.0));
}

TEST_CASE("cross-team overlap is a collision, teammates only push") {
  EnvConfig cfg;
  WorldState s = quiet_state();
  s.agents[0].pos = {-1.0, -1.0};
  s.agents[2].pos = {-0.95, -1.0};
  s.agents[1].pos = {1.0, -1.02};
  s.agents[3].pos = {1.0, 1.0};
  auto out = step(s, zero_actions(), cfg);
  CHECK(out.second.collisions == std::vector<std::pair<int, int>>{{0, 2}});
  CHECK(out.first.agents[0].vel.x < 0.0);
  CHECK(out.first.agents[2].vel.x > 0.0);

  WorldState mates = quiet_state();
  mates.agents[1].pos = {-0.95, -1.0};
  out = step(mates, zero_actions(), cfg);
  CHECK(out.second.collisions.empty());
  CHECK(out.first.agents[0].vel.x < 0.0);
}

TEST_CASE("episode ends at T") {
  EnvConfig cfg;
  cfg.max_episode_len = 3;
  WorldState s = quiet_state();
  for (int k = 1; k <= 3; ++k) {
    auto [next, out] = step(s, zero_actions(), cfg);
    CHECK(out.done == (k == 3));
    s = next;
  }
}

TEST_CASE("observation layout") {
  WorldState s = quiet_state();
  s.agents[0].pos = {0.0, 0.0};
  s.agents[0].vel = {0.3, -0.2};
  s.landmarks[0] = {1.0, 0.0};
  const Observation o = observe(s, 0);
  CHECK(o[0] == 0.0);
  CHECK(o[2] == 0.3);
  CHECK(o[3] == -0.2);
  CHECK(o[4] == 1.0);
  CHECK(o[5] == 0.0);
  CHECK(o[8] == s.agents[1].pos.x);  // teammate first
  CHECK(o[10] == s.agents[2].pos.x);
  CHECK(o[14] == 4.0);

  const Observation o2 = observe(s, 2);
  CHECK(o2[8] == s.agents[3].pos.x - s.agents[2].pos.x);
  CHECK(o2[10] == s.agents[0].pos.x - s.agents[2].pos.x);

  s.agents[1].pos = s.landmarks[1];
  const Observation o1 = observe(s, 1);
  CHECK(o1[6] == 0.0);
  CHECK(o1[7] == 0.0);
  CHECK_THROWS_AS(observe(s, 4), InputError);
}

TEST_CASE("translation changes only own-position entries") {
  Rng rng(3);
  const WorldState s = reset(EnvConfig{}, rng);
  WorldState moved = s;
  for (auto& a : moved.agents) a.pos += Vec2{0.25, 0.25};
  for (auto& l : moved.landmarks) l += Vec2{0.25, 0.25};
  for (int i = 0; i < kNumAgents; ++i) {
    const Observation a = observe(s, i), b = observe(moved, i);
    CHECK(b[0] == doctest::Approx(a[0] + 0.25));
    CHECK(b[1] == doctest::Approx(a[1] + 0.25));
    for (int k = 2; k < kObsDim; ++k) CHECK(b[k] == doctest::Approx(a[k]));
  }
}

TEST_CASE("global state layout") {
  const WorldState zero{};
  for (double v : global_state(zero)) CHECK(v == 0.0);
  WorldState s = quiet_state();
  s.agents[0].vel = {0.1, 0.2};
  const GlobalState g = global_state(s);
  CHECK(g.size() == 20);
  CHECK(g[0] == -1.0);
  CHECK(g[2] == 0.1);
  CHECK(g[3] == 0.2);
  CHECK(g[4] == -1.0);
  CHECK(g[5] == 1.0);
  CHECK(g[16] == 0.0);
  CHECK(g[18] == 0.5);

  const GlobalState v = team_view(g, 1);
  for (int k = 0; k < 8; ++k) {
    CHECK(v[k] == g[8 + k]);
    CHECK(v[8 + k] == g[k]);
  }
  for (int k = 16; k < 20; ++k) CHECK(v[k] == g[k]);
  CHECK(team_view(g, 0) == g);
}

TEST_CASE("nearest landmark distance") {
  WorldState s = quiet_state();
  s.agents[0].pos = {0.0, 0.0};
  s.landmarks = {Vec2{3.0, 4.0}, Vec2{6.0, 8.0}};
  CHECK(nearest_landmark_distance(s, 0) == 5.0);
  s.agents[0].pos = {6.0, 8.0};
  CHECK(nearest_landmark_distance(s, 0) == 0.0);
}

TEST_CASE("team position swap") {
  Rng rng(9);
  const WorldState s = reset(EnvConfig{}, {4.0, 4.0, 3.0, 2.0}, rng);
  const WorldState w = swap_team_positions(s);
  CHECK(w.agents[0].pos == s.agents[2].pos);
  CHECK(w.agents[3].pos == s.agents[1].pos);
  CHECK(w.agents[0].max_speed == 4.0);
  CHECK(w.agents[3].max_speed == 2.0);
  CHECK(w.landmarks == s.landmarks);
  CHECK(swap_team_positions(w) == s);
}

TEST_CASE("config validation names the field") {
  EnvConfig cfg;
  cfg.dt = -1.0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("dt"), InputError);
  cfg = EnvConfig{};
  cfg.initial_max_speeds = {4.0, 4.0, 4.0, 6.0};
  CHECK_THROWS_AS(cfg.validate(), InputError);
  CHECK_NOTHROW(EnvConfig{}.validate());
}

TEST_CASE("trajectory export") {
  std::ostringstream out;
  write_trajectory_header(out);
  write_trajectory_row(out, quiet_state(), {{0, 2}});
  const std::string text = out.str();
  CHECK(text.find("episode,step") == 0);
  CHECK(text.find("0-2") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}
