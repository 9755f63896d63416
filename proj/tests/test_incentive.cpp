#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "tmlab/errors.hpp"
#include "tmlab/incentive/schemes.hpp"
#include "tmlab/rng.hpp"

using namespace tmlab;
using namespace tmlab::incentive;

namespace {

const RoleAssignment kRoles{};  // weak team 1, weak agent 3

StatsWindow window_with(const std::array<int, 4>& counts, int length = 1000) {
  StatsWindow w(length);
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k < counts[i]; ++k) w.advance(i);
  }
  return w;
}

}  // namespace

TEST_CASE("terminal rewards on the worked values") {
  const auto weak_agent = terminal_rewards({0.3, 0.7}, 3, kRoles, 30.0);
  CHECK(weak_agent == std::array<double, 4>{-30.0, -30.0, 60.0, 60.0});

  const auto weak_strong = terminal_rewards({0.1, 0.0}, 2, kRoles, 30.0);
  CHECK(weak_strong[2] == 33.0);
  CHECK(weak_strong[3] == 33.0);
  CHECK(weak_strong[0] == -30.0);

  const auto strong = terminal_rewards({0.3, 0.7}, 0, kRoles, 30.0);
  CHECK(strong == std::array<double, 4>{30.0, 30.0, -30.0, -30.0});
}

TEST_CASE("terminal rewards: zero alphas are zero-sum, surplus goes to the weak team") {
  for (int scorer = 0; scorer < 4; ++scorer) {
    const auto r = terminal_rewards({0.0, 0.0}, scorer, kRoles, 30.0);
    CHECK(r[0] + r[1] + r[2] + r[3] == 0.0);
    const auto s = terminal_rewards({0.25, 0.5}, scorer, kRoles, 30.0);
    const double surplus = s[0] + s[1] + s[2] + s[3];
    const double expect = scorer == 3 ? 0.75 * 30 * 2 : scorer == 2 ? 0.25 * 30 * 2 : 0.0;
    CHECK(surplus == doctest::Approx(expect));
  }
}

TEST_CASE("StaticTeam is StaticAgent with alpha_A = 0") {
  const std::array<double, 4> speeds{4, 4, 4, 2};
  const IncentiveScheme team({SchemeKind::kStaticTeam, 0.1, 0.0}, kRoles, speeds);
  const IncentiveScheme agent({SchemeKind::kStaticAgent, 0.1, 0.0}, kRoles, speeds);
  for (int scorer = 0; scorer < 4; ++scorer) {
    CHECK(team.terminal(scorer, 30.0) == agent.terminal(scorer, 30.0));
  }
  CHECK_THROWS_AS(SchemeSpec({SchemeKind::kStaticTeam, 0.1, 0.2}).validate(), InputError);
}

TEST_CASE("role assignment from speeds") {
  CHECK(assign_roles({4, 4, 4, 4}) == RoleAssignment{1, 3});
  CHECK(assign_roles({4, 4, 4, 2}) == RoleAssignment{1, 3});
  CHECK(assign_roles({2, 4, 4, 4}) == RoleAssignment{0, 0});
  CHECK(assign_roles({4, 3, 3, 4}) == RoleAssignment{1, 2});
  CHECK(RoleAssignment{0, 1}.weak_team_strong_member() == 0);
  CHECK_THROWS_AS(RoleAssignment({0, 3}).validate(), InputError);
}

TEST_CASE("normalization") {
  const auto even = normalized_stats(window_with({10, 10, 10, 10}), StatMode::kLandmark);
  for (int i = 0; i < 4; ++i) CHECK(even.agent(i) == 1.0);
  CHECK(even.team(0) == 2.0);
  CHECK(even.team(1) == 2.0);

  const auto n = normalized_stats(window_with({10, 5, 4, 1}), StatMode::kLandmark);
  CHECK(n.agent(0) == 1.0);
  CHECK(n.agent(1) == 0.5);
  CHECK(n.agent(2) == 0.4);
  CHECK(n.agent(3) == 0.1);
  CHECK(n.team(0) == 1.5);
  CHECK(n.team(1) == 0.5);

  const auto none = normalized_stats(window_with({0, 0, 0, 0}), StatMode::kLandmark);
  for (int i = 0; i < 4; ++i) CHECK(none.agent(i) == 0.0);
}

TEST_CASE("dynamic alphas: the worked example is exact") {
  const auto a = dynamic_alphas(normalized_stats(window_with({10, 5, 4, 1}), StatMode::kLandmark), kRoles);
  CHECK(a.team == 1.0);
  CHECK(a.agent == 0.3);
}

TEST_CASE("dynamic alphas: clamp and symmetry") {
  // weak team ahead: team n (0.8, 1.6) scaled from raw (4, 4, 8, 8)
  const auto ahead = dynamic_alphas(normalize({4, 4, 8, 8}), kRoles);
  CHECK(ahead.team == 0.0);
  CHECK(ahead.agent == 0.0);
  const auto same = dynamic_alphas(normalize({3, 7, 5, 5}), kRoles);
  CHECK(same.agent == 0.0);

  StatsWindow w(10);
  w.set_speeds({4, 4, 4, 4});
  const auto speed = dynamic_alphas(normalized_stats(w, StatMode::kSpeed), kRoles);
  CHECK(speed == IncentiveParams{0.0, 0.0});

  Rng rng(1);
  for (int k = 0; k < 5000; ++k) {
    std::array<double, 4> raw{};
    for (auto& v : raw) v = static_cast<double>(rng.below(50));
    const auto a = dynamic_alphas(normalize(raw), kRoles);
    CHECK(a.team >= 0.0);
    CHECK(a.agent >= 0.0);
    const double c = 1.0 + static_cast<double>(rng.below(9));
    const auto b = dynamic_alphas(normalize({raw[0] * c, raw[1] * c, raw[2] * c, raw[3] * c}), kRoles);
    CHECK(b.team == doctest::Approx(a.team).epsilon(1e-12));
    CHECK(b.agent == doctest::Approx(a.agent).epsilon(1e-12));
  }
}

TEST_CASE("stats window slides per episode") {
  StatsWindow w(3);
  w.advance(0);
  w.advance(0);
  w.advance(1);
  CHECK(w.counts() == std::array<int, 4>{2, 1, 0, 0});
  w.advance(std::nullopt);
  CHECK(w.counts() == std::array<int, 4>{1, 1, 0, 0});
  w.advance(std::nullopt);
  w.advance(std::nullopt);
  CHECK(w.counts() == std::array<int, 4>{0, 0, 0, 0});
  CHECK(w.episodes() == 3);

  const StatsWindow r = StatsWindow::restore(3, std::deque<int>{2, -1, 3}, {1, 2, 3, 4});
  CHECK(r.counts() == std::array<int, 4>{0, 0, 1, 1});
  CHECK(r.speeds() == std::array<double, 4>{1, 2, 3, 4});
  CHECK_THROWS(StatsWindow(0));
}

TEST_CASE("dynamic landmark scheme follows the window") {
  IncentiveScheme s({SchemeKind::kDynamicLandmark, 0, 0, 100}, kRoles, {4, 4, 4, 4});
  CHECK(s.current() == IncentiveParams{0.0, 0.0});
  const std::array<int, 4> counts{10, 5, 4, 1};
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k < counts[i]; ++k) s.end_episode(i, {4, 4, 4, 4});
  }
  CHECK(s.current().team == 1.0);
  CHECK(s.current().agent == 0.3);
}

TEST_CASE("dynamic speed scheme uses the current speeds") {
  IncentiveScheme s({SchemeKind::kDynamicSpeed}, kRoles, {4, 4, 4, 2});
  // n = (1, 1, 1, 0.5): alpha_T = 2 - 1.5, alpha_A = 1 - 0.5
  CHECK(s.current().team == 0.5);
  CHECK(s.current().agent == 0.5);
  s.end_episode(3, {4, 4, 4, 4});
  CHECK(s.current() == IncentiveParams{0.0, 0.0});
}

TEST_CASE("RL schemes are cross-wired") {
  const std::array<double, 4> speeds{4, 4, 4, 2};
  IncentiveScheme team_rl({SchemeKind::kTeamRLAgentDynamic}, kRoles, speeds);
  team_rl.set_rl_alpha(1.25);
  CHECK(team_rl.current().team == 1.25);
  CHECK(team_rl.current().agent == 0.5);

  IncentiveScheme agent_rl({SchemeKind::kTeamDynamicAgentRL}, kRoles, speeds);
  agent_rl.set_rl_alpha(0.75);
  CHECK(agent_rl.current().team == 0.5);
  CHECK(agent_rl.current().agent == 0.75);

  IncentiveScheme fixed({SchemeKind::kStaticAgent, 0.3, 0.7}, kRoles, speeds);
  CHECK_THROWS_AS(fixed.set_rl_alpha(1.0), InputError);
  CHECK_THROWS_AS(agent_rl.set_rl_alpha(-1.0), InputError);
}

TEST_CASE("scheme names round-trip") {
  for (auto k : {SchemeKind::kStaticTeam, SchemeKind::kStaticAgent, SchemeKind::kDynamicLandmark,
                 SchemeKind::kDynamicSpeed, SchemeKind::kTeamRLAgentDynamic,
                 SchemeKind::kTeamDynamicAgentRL}) {
    CHECK(parse_scheme_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_scheme_kind("Generous"), InputError);
}
