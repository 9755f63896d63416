#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support/test_support.hpp"
#include "tmlab/errors.hpp"
#include "tmlab/maddpg/maddpg.hpp"

using namespace tmlab;
using namespace tmlab::maddpg;
using nn::Activation;
using nn::Mlp;

namespace {

TrainHyper small_hyper() {
  TrainHyper h;
  h.hidden = {16, 16};
  return h;
}

BatchTensors random_batch(int n, Rng& rng) {
  const auto items = testing::random_transitions(n, rng);
  return to_tensors(items);
}

// Critic returning a constant, whatever the input.
Mlp constant_critic(double value) {
  Mlp c({kCriticInputDim, 4, 1}, Activation::kRelu, Activation::kIdentity);
  c.layers()[1].bias(0) = value;
  return c;
}

// Q = -sum_d |a_{agent,d} - target_d|, built from relu pairs.
Mlp bowl_critic(int agent, env::Action target) {
  Mlp c({kCriticInputDim, 4, 1}, Activation::kRelu, Activation::kIdentity);
  auto& l = c.layers();
  for (int d = 0; d < 2; ++d) {
    const int col = env::kGlobalDim + 2 * agent + d;
    l[0].weight(2 * d, col) = 1.0;
    l[0].bias(2 * d) = -target[d];
    l[0].weight(2 * d + 1, col) = -1.0;
    l[0].bias(2 * d + 1) = target[d];
  }
  l[1].weight.setConstant(-1.0);
  return c;
}

}  // namespace

TEST_CASE("act: noiseless equals the actor output, always in range, reproducible") {
  Rng rng(1);
  const Policy p = make_policy(small_hyper(), rng);
  env::Observation o{};
  for (auto& v : o) v = rng.uniform(-1.0, 1.0);
  const auto out = p.net.forward(o);
  const env::Action a = act(p.net, o, 0.0, rng);
  CHECK(a[0] == out[0]);
  CHECK(a[1] == out[1]);
  for (int k = 0; k < 500; ++k) {
    const env::Action n = act(p.net, o, 5.0, rng);
    CHECK(std::abs(n[0]) <= 1.0);
    CHECK(std::abs(n[1]) <= 1.0);
  }
  Rng r1(7), r2(7);
  CHECK(act(p.net, o, 0.3, r1) == act(p.net, o, 0.3, r2));
}

TEST_CASE("critic targets") {
  Rng rng(2);
  BatchTensors b = random_batch(6, rng);
  const Policy p = make_policy(small_hyper(), rng);
  const Critic c = make_critic(small_hyper(), rng);
  const std::array<const Mlp*, 4> actors{&p.target, &p.target, &p.target, &p.target};
  const std::array<const Mlp*, 4> critics{&c.target, &c.target, &c.target, &c.target};
  const auto a_next = target_joint_actions(actors, b);

  SUBCASE("gamma 0 gives the reward") {
    const auto y = critic_targets(critics, b, a_next, 0.0);
    CHECK(y == b.rewards);
  }
  SUBCASE("terminal samples drop the bootstrap") {
    b.not_done.setZero();
    const auto y = critic_targets(critics, b, a_next, 0.95);
    CHECK(y == b.rewards);
  }
  SUBCASE("stub critics returning 2, r = 1, gamma 0.95 give 2.9") {
    const Mlp two = constant_critic(2.0);
    const std::array<const Mlp*, 4> stubs{&two, &two, &two, &two};
    b.rewards.setOnes();
    b.not_done.setOnes();
    const auto y = critic_targets(stubs, b, a_next, 0.95);
    for (int i = 0; i < 4; ++i) {
      for (int k = 0; k < b.size(); ++k) CHECK(y(i, k) == doctest::Approx(2.9).epsilon(1e-15));
    }
  }
}

TEST_CASE("critic update: exact fit is a fixed point") {
  Rng rng(3);
  const BatchTensors b = random_batch(8, rng);
  Critic c = make_critic(small_hyper(), rng);
  const nn::Matrix y = c.net.forward(critic_inputs(b.global, b.actions));
  const Mlp before = c.net;
  CHECK(critic_update(c, b, y) == 0.0);
  CHECK(c.net == before);
}

TEST_CASE("critic update: loss falls on a fixed batch") {
  Rng rng(4);
  const BatchTensors b = random_batch(32, rng);
  Critic c = make_critic(small_hyper(), rng);
  const nn::Matrix y = b.rewards.row(0) / 30.0;
  const double first = critic_update(c, b, y);
  double last = first;
  for (int k = 0; k < 100; ++k) last = critic_update(c, b, y);
  CHECK(last < 0.5 * first);
}

TEST_CASE("critic loss gradient matches finite differences") {
  Rng rng(5);
  const BatchTensors b = random_batch(5, rng);
  Critic c = make_critic(small_hyper(), rng);
  const nn::Matrix y = testing::random_matrix(1, 5, rng);
  const auto analytic = critic_loss_gradient(c.net, b, y).grads.to_vector();
  const auto numeric =
      testing::numeric_gradient(c.net, [&] { return critic_loss_gradient(c.net, b, y).value; });
  CHECK(testing::relative_error(analytic, numeric) <= 1e-6);
}

TEST_CASE("actor objective gradient matches finite differences") {
  Rng rng(6);
  const BatchTensors b = random_batch(5, rng);
  Policy p = make_policy(small_hyper(), rng);
  const Critic c = make_critic(small_hyper(), rng);
  for (int agent = 0; agent < 4; ++agent) {
    const auto analytic = actor_objective_gradient(p.net, c.net, b, agent).grads.to_vector();
    const auto numeric = testing::numeric_gradient(
        p.net, [&] { return -actor_objective_gradient(p.net, c.net, b, agent).value; });
    CHECK(testing::relative_error(analytic, numeric) <= 1e-6);
  }
}

TEST_CASE("actor update: constant critic leaves the actor alone") {
  Rng rng(7);
  const BatchTensors b = random_batch(8, rng);
  Policy p = make_policy(small_hyper(), rng);
  const Mlp before = p.net;
  actor_update(p, constant_critic(3.0), b, 1);
  CHECK(p.net == before);
}

TEST_CASE("actor update: a bowl critic pulls the action to its centre") {
  Rng rng(8);
  const BatchTensors b = random_batch(16, rng);
  TrainHyper h = small_hyper();
  h.lr_actor = 1e-3;
  Policy p = make_policy(h, rng);
  const env::Action centre{0.3, -0.5};
  const Mlp critic = bowl_critic(2, centre);
  for (int k = 0; k < 3000; ++k) actor_update(p, critic, b, 2);
  const nn::Matrix out = p.net.forward(b.obs[2]);
  CHECK((out.row(0).array() - centre[0]).abs().maxCoeff() < 0.05);
  CHECK((out.row(1).array() - centre[1]).abs().maxCoeff() < 0.05);
}

TEST_CASE("soft updates move targets toward sources") {
  Rng rng(9);
  Policy p = make_policy(small_hyper(), rng);
  p.net = Mlp::random(p.net.layer_sizes(), Activation::kRelu, Activation::kTanh, rng);
  const Mlp start = p.target;
  soft_update(p, 0.0);
  CHECK(p.target == start);
  for (int k = 0; k < 10; ++k) soft_update(p, 0.5);
  for (std::size_t i = 0; i < p.net.parameter_count(); ++i) {
    const double lo = std::min(start.parameter(i), p.net.parameter(i));
    const double hi = std::max(start.parameter(i), p.net.parameter(i));
    CHECK(p.target.parameter(i) >= lo);
    CHECK(p.target.parameter(i) <= hi);
  }
  Critic c = make_critic(small_hyper(), rng);
  c.net = Mlp::random(c.net.layer_sizes(), Activation::kRelu, Activation::kIdentity, rng);
  soft_update(c, 1.0);
  CHECK(c.target == c.net);
}

TEST_CASE("a full update step is deterministic") {
  auto run = [] {
    Rng rng(10);
    const BatchTensors b = random_batch(16, rng);
    std::array<MaddpgAgent, 4> agents;
    for (auto& a : agents) a = make_agent(small_hyper(), rng);
    std::array<const Mlp*, 4> ta{}, tc{};
    for (int i = 0; i < 4; ++i) {
      ta[i] = &agents[i].actor.target;
      tc[i] = &agents[i].critic.target;
    }
    const auto y = critic_targets(tc, b, target_joint_actions(ta, b), 0.95);
    for (int i = 0; i < 4; ++i) critic_update(agents[i].critic, b, y.row(i));
    for (int i = 0; i < 4; ++i) actor_update(agents[i].actor, agents[i].critic.net, b, i);
    for (auto& a : agents) {
      soft_update(a.actor, 0.01);
      soft_update(a.critic, 0.01);
    }
    return agents;
  };
  const auto a = run(), b = run();
  for (int i = 0; i < 4; ++i) {
    CHECK(a[i].actor.net == b[i].actor.net);
    CHECK(a[i].critic.target == b[i].critic.target);
  }
}

TEST_CASE("batch tensors: layout and column selection") {
  Rng rng(11);
  const auto items = testing::random_transitions(4, rng);
  const BatchTensors b = to_tensors(items);
  CHECK(b.size() == 4);
  CHECK(b.actions(5, 2) == items[2].actions[2][1]);
  CHECK(b.obs[3](14, 1) == items[1].obs[3][14]);
  CHECK(b.not_done(0, 3) == (items[3].done ? 0.0 : 1.0));
  const std::vector<int> cols{3, 1};
  const BatchTensors s = b.select(cols);
  CHECK(s.size() == 2);
  CHECK(s.global.col(0) == b.global.col(3));
  CHECK(s.labels[2][1] == items[1].labels[2]);
}

TEST_CASE("hyperparameter validation") {
  TrainHyper h;
  CHECK_NOTHROW(h.validate());
  h.gamma = 1.0;
  CHECK_THROWS_AS(h.validate(), InputError);
}
