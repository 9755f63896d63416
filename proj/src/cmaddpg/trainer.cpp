#include "tmlab/cmaddpg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tmlab/errors.hpp"

namespace tmlab::cmaddpg {
namespace {

constexpr std::array<char, 4> kTrainerTag{'T', 'R', 'N', 'R'};

void write_policy(nn::BinaryWriter& w, const maddpg::Policy& p) {
  nn::write_mlp(w, p.net);
  nn::write_mlp(w, p.target);
  nn::write_adam(w, p.opt);
}

void read_policy(nn::BinaryReader& r, maddpg::Policy& p) {
  nn::Mlp net = nn::read_mlp(r);
  nn::Mlp target = nn::read_mlp(r);
  if (!net.same_shape(p.net) || !target.same_shape(p.target)) {
    throw FormatError("checkpoint network shape does not match the configuration");
  }
  p.opt = nn::read_adam(r, net);
  p.net = std::move(net);
  p.target = std::move(target);
}

void write_critic(nn::BinaryWriter& w, const maddpg::Critic& c) {
  nn::write_mlp(w, c.net);
  nn::write_mlp(w, c.target);
  nn::write_adam(w, c.opt);
}

void read_critic(nn::BinaryReader& r, maddpg::Critic& c) {
  nn::Mlp net = nn::read_mlp(r);
  nn::Mlp target = nn::read_mlp(r);
  if (!net.same_shape(c.net) || !target.same_shape(c.target)) {
    throw FormatError("checkpoint critic shape does not match the configuration");
  }
  c.opt = nn::read_adam(r, net);
  c.net = std::move(net);
  c.target = std::move(target);
}

template <std::size_t N>
void write_array(nn::BinaryWriter& w, const std::array<double, N>& a) {
  for (double v : a) w.f64(v);
}

template <std::size_t N>
void read_array(nn::BinaryReader& r, std::array<double, N>& a) {
  for (double& v : a) v = r.f64();
}

void write_transition(nn::BinaryWriter& w, const replay::Transition& t) {
  for (const auto& o : t.obs) write_array(w, o);
  write_array(w, t.global);
  for (int l : t.labels) w.u8(static_cast<std::uint8_t>(l));
  for (const auto& a : t.actions) write_array(w, a);
  write_array(w, t.rewards);
  for (const auto& o : t.obs_next) write_array(w, o);
  write_array(w, t.global_next);
  w.u8(t.done ? 1 : 0);
  w.u64(t.serial);
}

replay::Transition read_transition(nn::BinaryReader& r) {
  replay::Transition t;
  for (auto& o : t.obs) read_array(r, o);
  read_array(r, t.global);
  for (int& l : t.labels) {
    l = r.u8();
    if (l != 1 && l != 2) throw FormatError("checkpoint transition has an invalid label");
  }
  for (auto& a : t.actions) read_array(r, a);
  read_array(r, t.rewards);
  for (auto& o : t.obs_next) read_array(r, o);
  read_array(r, t.global_next);
  t.done = r.u8() != 0;
  t.serial = r.u64();
  return t;
}

void write_row(nn::BinaryWriter& w, const eval::MetricsRow& row) {
  w.i64(row.episode);
  write_array(w, row.team_reward);
  for (int v : row.landmark) w.u8(static_cast<std::uint8_t>(v));
  write_array(w, row.win_policy);
  write_array(w, row.speed);
  w.f64(row.incentive_team);
  w.f64(row.incentive_agent);
  w.i64(row.collisions);
}

eval::MetricsRow read_row(nn::BinaryReader& r) {
  eval::MetricsRow row;
  row.episode = static_cast<int>(r.i64());
  read_array(r, row.team_reward);
  for (int& v : row.landmark) v = r.u8();
  read_array(r, row.win_policy);
  read_array(r, row.speed);
  row.incentive_team = r.f64();
  row.incentive_agent = r.f64();
  row.collisions = static_cast<int>(r.i64());
  return row;
}

template <std::size_t N>
void write_counts(nn::BinaryWriter& w, const std::array<std::uint64_t, N>& a) {
  for (auto v : a) w.u64(v);
}

template <std::size_t N>
void read_counts(nn::BinaryReader& r, std::array<std::uint64_t, N>& a) {
  for (auto& v : a) v = r.u64();
}

}  // namespace

std::string_view to_string(Algorithm a) { return a == Algorithm::kMaddpg ? "maddpg" : "cmaddpg"; }

Algorithm parse_algorithm(std::string_view name) {
  if (name == "maddpg") return Algorithm::kMaddpg;
  if (name == "cmaddpg") return Algorithm::kCmaddpg;
  throw InputError("unknown algorithm '" + std::string(name) + "' (expected maddpg or cmaddpg)");
}

void CmaddpgHyper::validate() const {
  train.validate();
  controller.validate();
  if (exploration_c < 0.0 || !std::isfinite(exploration_c)) {
    throw InputError("cmaddpg.exploration_c must be > 0 (or 0 for the default)");
  }
  if (tau < 1) throw InputError("cmaddpg.tau must be >= 1");
  if (controller_window == 0) throw InputError("cmaddpg.controller_window must be positive");
}

void TrainConfig::validate() const {
  env.validate();
  hyper.validate();
  scheme.validate();
  if (roles) roles->validate();
  if (planned_episodes < 0) throw InputError("episodes must be >= 0");
}

double TrainConfig::exploration_constant() const {
  if (hyper.exploration_c > 0.0) return hyper.exploration_c;
  return std::max(1.0, planned_episodes / 5.0);
}

int TeamPolicy::label(const env::GlobalState& view) const {
  return controller ? select_policy(*controller, view) : 1;
}

env::Action TeamPolicy::act(int member, const env::Observation& obs, int label) const {
  const auto& ensemble = actors[member];
  const nn::Mlp& net = ensemble[ensemble.size() == 1 ? 0 : static_cast<std::size_t>(label - 1)];
  const std::vector<double> out = net.forward(obs);
  return {std::clamp(out[0], -1.0, 1.0), std::clamp(out[1], -1.0, 1.0)};
}

Trainer::Trainer(TrainConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      rng_(seed),
      ensemble_size_(config_.algorithm == Algorithm::kCmaddpg ? 2 : 1),
      exploration_c_(config_.exploration_constant()),
      buffer_(config_.hyper.train.buffer_capacity),
      scheme_(config_.scheme,
              config_.roles.value_or(incentive::assign_roles(config_.env.initial_max_speeds)),
              config_.env.initial_max_speeds),
      speeds_(config_.env.initial_max_speeds),
      noise_(config_.hyper.train.noise_std) {
  config_.validate();
  for (auto& a : agents_) a = make_ensemble_agent(config_.hyper.train, ensemble_size_, rng_);
  if (ensemble_size_ == 2) {
    for (auto& c : controllers_) c = make_controller(config_.hyper.controller, rng_);
  }
}

TeamPolicy Trainer::team_policy(int team) const {
  if (team != 0 && team != 1) throw InputError("team_policy: team must be 0 or 1");
  TeamPolicy p;
  for (int m = 0; m < 2; ++m) {
    const EnsembleAgent& a = agents_[2 * team + m];
    for (const auto& pol : a.policies) p.actors[m].push_back(pol.net);
    p.speeds[m] = speeds_[2 * team + m];
  }
  if (ensemble_size_ == 2) p.controller = controllers_[team].net;
  return p;
}

env::JointAction Trainer::choose_actions(const env::WorldState& world, int episode,
                                         std::array<int, env::kNumTeams>& labels) {
  env::JointAction actions{};
  if (config_.behavior == Behavior::kUniformRandom) {
    labels = {1, 1};
    for (auto& a : actions) {
      for (double& c : a) c = rng_.uniform(-1.0, 1.0);
    }
    return actions;
  }
  const env::GlobalState x = env::global_state(world);
  for (int k = 0; k < env::kNumTeams; ++k) {
    labels[k] = ensemble_size_ == 2 ? select_policy(controllers_[k].net, env::team_view(x, k)) : 1;
  }
  for (int i = 0; i < env::kNumAgents; ++i) {
    env::Action a{};
    const bool explore = ensemble_size_ == 2 && exploration_gate(episode, exploration_c_, rng_);
    if (explore) {
      for (double& c : a) c = rng_.uniform(-1.0, 1.0);
    } else {
      const auto& pol = agents_[i].policies[static_cast<std::size_t>(labels[env::team_of(i)] - 1) %
                                            agents_[i].policies.size()];
      const std::vector<double> out = pol.net.forward(env::observe(world, i));
      a = {out[0], out[1]};
    }
    for (double& c : a) {
      if (noise_ > 0.0) c += noise_ * rng_.normal();
      c = std::clamp(c, -1.0, 1.0);
    }
    actions[i] = a;
  }
  return actions;
}

void Trainer::update_round() {
  const auto& hyper = config_.hyper.train;
  auto sampled = buffer_.sample(static_cast<std::size_t>(hyper.batch), rng_);
  if (!sampled) return;
  const maddpg::BatchTensors b = maddpg::to_tensors(*sampled);

  // Next actions from the target policies the controllers would pick at x'.
  maddpg::Matrix next_actions(env::kNumAgents * env::kActionDim, b.size());
  std::array<std::vector<int>, env::kNumTeams> next_labels;
  for (int k = 0; k < env::kNumTeams; ++k) {
    next_labels[k].assign(static_cast<std::size_t>(b.size()), 1);
    if (ensemble_size_ == 2) {
      const maddpg::Matrix p = controllers_[k].net.forward(team_view_rows(b.global_next, k));
      for (int c = 0; c < b.size(); ++c) next_labels[k][c] = p(0, c) >= 0.5 ? 1 : 2;
    }
  }
  for (int i = 0; i < env::kNumAgents; ++i) {
    const auto& policies = agents_[i].policies;
    std::vector<maddpg::Matrix> outs;
    for (const auto& pol : policies) outs.push_back(pol.target.forward(b.obs_next[i]));
    const auto& lab = next_labels[env::team_of(i)];
    for (int c = 0; c < b.size(); ++c) {
      const auto j = static_cast<std::size_t>(lab[c] - 1) % policies.size();
      next_actions.block(2 * i, c, 2, 1) = outs[j].col(c);
    }
  }

  std::array<const nn::Mlp*, env::kNumAgents> target_critics{};
  for (int i = 0; i < env::kNumAgents; ++i) target_critics[i] = &agents_[i].critic.target;
  const maddpg::Matrix y = maddpg::critic_targets(target_critics, b, next_actions, hyper.gamma);

  for (int i = 0; i < env::kNumAgents; ++i) maddpg::critic_update(agents_[i].critic, b, y.row(i));

  for (int i = 0; i < env::kNumAgents; ++i) {
    std::vector<nn::Mlp> before;
    if (config_.audit) {
      for (const auto& pol : agents_[i].policies) before.push_back(pol.net);
    }
    const EnsembleUpdate upd = ensemble_policy_update(agents_[i], b, i);
    if (!config_.audit) continue;

    std::vector<int> hits(static_cast<std::size_t>(b.size()), 0);
    audit_.consumed[i] += static_cast<std::uint64_t>(b.size());
    for (const auto& t : *sampled) audit_.consumed_serial_sum[i] += t.serial;
    for (int j = 0; j < ensemble_size_; ++j) {
      audit_.per_policy[i][j] += upd.columns[j].size();
      for (int c : upd.columns[j]) {
        ++hits[c];
        audit_.per_policy_serial_sum[i][j] += (*sampled)[c].serial;
        if (ensemble_size_ == 2 && b.labels[i][c] != j + 1) ++audit_.wrong_label;
      }
      if (upd.columns[j].empty() && !(agents_[i].policies[j].net == before[j])) {
        ++audit_.skipped_changed;
      }
    }
    for (int h : hits) {
      if (h == 0) ++audit_.dropped;
      if (h > 1) ++audit_.overlapping;
    }
  }
  if (config_.audit) ++audit_.update_rounds;

  for (auto& a : agents_) {
    for (auto& pol : a.policies) maddpg::soft_update(pol, hyper.polyak);
    maddpg::soft_update(a.critic, hyper.polyak);
  }
}

const eval::MetricsRow& Trainer::run_episode() {
  const int ep = episode_ + 1;
  const auto& hyper = config_.hyper.train;
  const bool learn = config_.behavior == Behavior::kLearn;

  env::WorldState world = env::reset(config_.env, speeds_, rng_);
  world.episode_index = ep;
  const incentive::IncentiveParams params = scheme_.current();

  std::array<double, env::kNumAgents> returns{};
  std::array<int, env::kNumTeams> winning_steps{};
  int collisions = 0;
  int steps = 0;
  std::optional<int> scorer;
  last_labels_.clear();

  try {
    while (!world.done) {
      replay::Transition t;
      t.global = env::global_state(world);
      for (int i = 0; i < env::kNumAgents; ++i) t.obs[i] = env::observe(world, i);

      std::array<int, env::kNumTeams> used{1, 1};
      t.actions = choose_actions(world, ep, used);
      last_labels_.push_back(used);
      for (int k = 0; k < env::kNumTeams; ++k) {
        if (ensemble_size_ == 2 && config_.behavior != Behavior::kUniformRandom && used[k] == 1) {
          ++winning_steps[k];
        }
      }

      auto [next, out] = env::step(world, t.actions, config_.env);
      t.rewards = out.shaping;
      if (out.scorer) {
        scorer = out.scorer;
        const auto bonus = scheme_.terminal(*out.scorer, config_.env.landmark_reward);
        for (int i = 0; i < env::kNumAgents; ++i) t.rewards[i] += bonus[i];
      }
      t.global_next = env::global_state(next);
      for (int i = 0; i < env::kNumAgents; ++i) t.obs_next[i] = env::observe(next, i);
      t.done = out.done;

      if (ensemble_size_ == 2) {
        std::array<const nn::Mlp*, env::kNumAgents> critics{};
        for (int i = 0; i < env::kNumAgents; ++i) critics[i] = &agents_[i].critic.net;
        t.labels = label_teams(critics, t.global, t.actions);
      } else {
        t.labels = {1, 1, 1, 1};
      }

      for (int i = 0; i < env::kNumAgents; ++i) returns[i] += t.rewards[i];
      collisions += static_cast<int>(out.collisions.size());
      ++steps;

      if (learn) {
        if (ensemble_size_ == 2) {
          for (int k = 0; k < env::kNumTeams; ++k) {
            pairs_[k].push_back({env::team_view(t.global, k), t.labels[2 * k]});
            if (pairs_[k].size() > config_.hyper.controller_window) pairs_[k].pop_front();
          }
        }
        buffer_.push(std::move(t));
        ++total_steps_;
        const std::size_t warmup = static_cast<std::size_t>(hyper.warmup_factor) *
                                   static_cast<std::size_t>(hyper.batch);
        if (total_steps_ % static_cast<std::uint64_t>(hyper.update_every) == 0 &&
            buffer_.size() >= warmup) {
          update_round();
        }
      }
      world = next;
    }

    if (learn && ensemble_size_ == 2 && ep % config_.hyper.tau == 0) {
      for (int k = 0; k < env::kNumTeams; ++k) {
        const std::vector<LabeledState> pairs(pairs_[k].begin(), pairs_[k].end());
        controller_update(controllers_[k], pairs, config_.hyper.controller, rng_);
      }
    }
  } catch (const NumericError& e) {
    throw NumericError("episode " + std::to_string(ep) + ": " + e.what());
  }

  speeds_ = world.max_speeds();
  scheme_.end_episode(scorer, speeds_);
  noise_ = std::max(hyper.noise_floor, noise_ * hyper.noise_decay);
  episode_ = ep;

  eval::MetricsRow row;
  row.episode = ep;
  for (int k = 0; k < env::kNumTeams; ++k) {
    row.team_reward[k] = 0.5 * (returns[2 * k] + returns[2 * k + 1]);
    row.win_policy[k] = static_cast<double>(winning_steps[k]) / steps;
  }
  if (scorer) row.landmark[*scorer] = 1;
  row.speed = speeds_;
  row.incentive_team = params.team;
  row.incentive_agent = params.agent;
  row.collisions = collisions;
  log_.push_back(row);
  return log_.back();
}

void Trainer::run(int episodes) {
  if (episodes < 0) throw InputError("run: episodes must be >= 0");
  for (int e = 0; e < episodes; ++e) run_episode();
}

void Trainer::save(nn::BinaryWriter& w) const {
  w.tag(kTrainerTag);
  w.u32(static_cast<std::uint32_t>(ensemble_size_));
  w.i64(episode_);
  w.u64(total_steps_);
  w.f64(noise_);
  w.string(rng_.state());
  write_array(w, speeds_);

  for (const auto& a : agents_) {
    for (const auto& p : a.policies) write_policy(w, p);
    write_critic(w, a.critic);
  }
  if (ensemble_size_ == 2) {
    for (int k = 0; k < env::kNumTeams; ++k) {
      nn::write_mlp(w, controllers_[k].net);
      nn::write_adam(w, controllers_[k].opt);
      w.u64(pairs_[k].size());
      for (const auto& p : pairs_[k]) {
        write_array(w, p.view);
        w.u8(static_cast<std::uint8_t>(p.label));
      }
    }
  }

  const auto& history = scheme_.window().history();
  w.u64(history.size());
  for (int s : history) w.u8(static_cast<std::uint8_t>(s + 1));
  write_array(w, scheme_.window().speeds());
  w.f64(scheme_.rl_alpha());

  w.u64(buffer_.capacity());
  w.u64(buffer_.slots().size());
  w.u64(buffer_.cursor());
  w.u64(buffer_.pushed());
  for (const auto& t : buffer_.slots()) write_transition(w, t);

  w.u64(log_.size());
  for (const auto& row : log_) write_row(w, row);

  write_counts(w, audit_.consumed);
  for (const auto& p : audit_.per_policy) write_counts(w, p);
  write_counts(w, audit_.consumed_serial_sum);
  for (const auto& p : audit_.per_policy_serial_sum) write_counts(w, p);
  for (auto v : {audit_.wrong_label, audit_.overlapping, audit_.dropped, audit_.skipped_changed,
                 audit_.update_rounds}) {
    w.u64(v);
  }
}

void Trainer::load(nn::BinaryReader& r) {
  if (r.tag() != kTrainerTag) throw FormatError("checkpoint: missing trainer section");
  if (r.u32() != static_cast<std::uint32_t>(ensemble_size_)) {
    throw FormatError("checkpoint: algorithm does not match the configuration");
  }
  const auto episode = r.i64();
  if (episode < 0) throw FormatError("checkpoint: negative episode counter");
  episode_ = static_cast<int>(episode);
  total_steps_ = r.u64();
  noise_ = r.f64();
  rng_.set_state(r.string());
  read_array(r, speeds_);

  for (auto& a : agents_) {
    for (auto& p : a.policies) read_policy(r, p);
    read_critic(r, a.critic);
  }
  if (ensemble_size_ == 2) {
    for (int k = 0; k < env::kNumTeams; ++k) {
      nn::Mlp net = nn::read_mlp(r);
      if (!net.same_shape(controllers_[k].net)) throw FormatError("checkpoint: controller shape mismatch");
      controllers_[k].opt = nn::read_adam(r, net);
      controllers_[k].net = std::move(net);
      const std::uint64_t n = r.u64();
      if (n > config_.hyper.controller_window) throw FormatError("checkpoint: controller window too large");
      pairs_[k].clear();
      for (std::uint64_t i = 0; i < n; ++i) {
        LabeledState p;
        read_array(r, p.view);
        p.label = r.u8();
        if (p.label != 1 && p.label != 2) throw FormatError("checkpoint: invalid controller label");
        pairs_[k].push_back(p);
      }
    }
  }

  const std::uint64_t hist = r.u64();
  if (hist > static_cast<std::uint64_t>(config_.scheme.window)) {
    throw FormatError("checkpoint: incentive window longer than configured");
  }
  std::deque<int> history;
  for (std::uint64_t i = 0; i < hist; ++i) {
    const int s = static_cast<int>(r.u8()) - 1;
    if (s < -1 || s >= env::kNumAgents) throw FormatError("checkpoint: invalid scorer record");
    history.push_back(s);
  }
  std::array<double, env::kNumAgents> window_speeds{};
  read_array(r, window_speeds);
  const double rl_alpha = r.f64();
  scheme_.restore(incentive::StatsWindow::restore(config_.scheme.window, history, window_speeds),
                  rl_alpha);

  const std::uint64_t capacity = r.u64();
  if (capacity != buffer_.capacity()) throw FormatError("checkpoint: replay capacity mismatch");
  const std::uint64_t n_slots = r.u64();
  const std::uint64_t cursor = r.u64();
  const std::uint64_t pushed = r.u64();
  if (n_slots > capacity) throw FormatError("checkpoint: replay slot count exceeds capacity");
  std::vector<replay::Transition> slots;
  slots.reserve(n_slots);
  for (std::uint64_t i = 0; i < n_slots; ++i) slots.push_back(read_transition(r));
  buffer_ = replay::ReplayBuffer::restore(capacity, std::move(slots), cursor, pushed);

  const std::uint64_t rows = r.u64();
  if (rows != static_cast<std::uint64_t>(episode_)) throw FormatError("checkpoint: log length mismatch");
  log_.clear();
  for (std::uint64_t i = 0; i < rows; ++i) log_.push_back(read_row(r));

  read_counts(r, audit_.consumed);
  for (auto& p : audit_.per_policy) read_counts(r, p);
  read_counts(r, audit_.consumed_serial_sum);
  for (auto& p : audit_.per_policy_serial_sum) read_counts(r, p);
  audit_.wrong_label = r.u64();
  audit_.overlapping = r.u64();
  audit_.dropped = r.u64();
  audit_.skipped_changed = r.u64();
  audit_.update_rounds = r.u64();
}

}  // namespace tmlab::cmaddpg
