#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "dissipanet/rl/learner.hpp"

namespace dissipanet::rl {

/// Fixed-capacity FIFO of transitions.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition tr);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }

  /// Oldest-first access.
  const Transition& at(std::size_t i) const;

  /// `n` distinct transitions chosen uniformly.
  std::vector<const Transition*> sample(std::size_t n, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // slot of the oldest element once full
  std::vector<Transition> data_;
};

}  // namespace dissipanet::rl
