#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "tmlab/env/touchmark.hpp"
#include "tmlab/rng.hpp"

namespace tmlab::replay {

// One stored step (x_t, y_t, a_t, r_t, x_{t+1}).
struct Transition {
  std::array<env::Observation, env::kNumAgents> obs{};
  env::GlobalState global{};
  std::array<int, env::kNumAgents> labels{1, 1, 1, 1};  // policy labels, equal within a team
  env::JointAction actions{};
  std::array<double, env::kNumAgents> rewards{};  // post-incentive
  std::array<env::Observation, env::kNumAgents> obs_next{};
  env::GlobalState global_next{};
  bool done = false;
  std::uint64_t serial = 0;  // insertion counter, assigned by push

  friend bool operator==(const Transition&, const Transition&) = default;
};

// Fixed-capacity ring buffer, oldest entries evicted first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);

  // Uniform with replacement. Returns nullopt while size() < batch.
  std::optional<std::vector<Transition>> sample(std::size_t batch, Rng& rng) const;

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t pushed() const { return pushed_; }
  // i-th oldest stored transition.
  const Transition& at(std::size_t i) const;

  void clear();

  // Physical slot layout, for checkpoints. Restoring the same slots and
  // cursor reproduces future samples exactly.
  const std::vector<Transition>& slots() const { return items_; }
  std::size_t cursor() const { return cursor_; }
  static ReplayBuffer restore(std::size_t capacity, std::vector<Transition> slots,
                              std::size_t cursor, std::uint64_t pushed);

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::size_t cursor_ = 0;  // next slot to overwrite once full
  std::uint64_t pushed_ = 0;
};

}  // namespace tmlab::replay
