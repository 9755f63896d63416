#include "tmlab/replay/replay_buffer.hpp"

#include "tmlab/errors.hpp"

namespace tmlab::replay {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InputError("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  t.serial = pushed_++;
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[cursor_] = std::move(t);
  cursor_ = (cursor_ + 1) % capacity_;
}

std::optional<std::vector<Transition>> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  if (batch == 0 || items_.size() < batch) return std::nullopt;
  std::vector<Transition> out;
  out.reserve(batch);
  for (std::size_t k = 0; k < batch; ++k) out.push_back(items_[rng.below(items_.size())]);
  return out;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= items_.size()) throw InputError("ReplayBuffer::at: index out of range");
  return items_[(cursor_ + i) % items_.size()];
}

void ReplayBuffer::clear() {
  items_.clear();
  cursor_ = 0;
}

ReplayBuffer ReplayBuffer::restore(std::size_t capacity, std::vector<Transition> slots,
                                   std::size_t cursor, std::uint64_t pushed) {
  ReplayBuffer b(capacity);
  if (slots.size() > capacity) throw FormatError("replay restore: more slots than capacity");
  if (cursor >= capacity || (slots.size() < capacity && cursor != 0)) {
    throw FormatError("replay restore: inconsistent cursor");
  }
  if (pushed < slots.size()) throw FormatError("replay restore: push counter below size");
  b.items_ = std::move(slots);
  b.cursor_ = cursor;
  b.pushed_ = pushed;
  return b;
}

}  // namespace tmlab::replay
